"""Single machine against a stiff source: bisection on the simulator versus equal area.

Sweeps the clearing time of a bolted fault on one of the two parallel lines
and prints the first unstable clearing time next to the closed form.
"""

import math

import numpy as np

from islanding.dynamics import detect_loss_of_sync, simulate
from islanding.grid import Branch, Bus, Event, EventSchedule, Generator, GridCase

P, H, XD, XTR, XL = 0.8, 5.0, 0.25, 0.1, 0.5
case = GridCase(
    100.0,
    [Bus(1, "PV", 1.0), Bus(2, "PQ"), Bus(3, "slack", 1.0)],
    [Branch(1, 1, 2, 0.0, XTR), Branch(2, 2, 3, 0.0, XL), Branch(3, 2, 3, 0.0, XL)],
    [Generator("G1", 1, P, 1.0, H, XD), Generator("G2", 3, 0.0, 1.0, 1e7, 1e-5)],
)


def stable(tc):
    ev = EventSchedule((Event(0.1, "fault_on_line", 3), Event(0.1 + tc, "clear_and_open_line", 3)))
    return not detect_loss_of_sync(simulate(case, ev, horizon=tc + 3.0)).unstable


base = simulate(case, horizon=0.0)
e1e2 = base.e_mag[0] * base.e_mag[1]
p_pre = e1e2 / (XD + XTR + XL / 2 + 1e-5)
p_post = e1e2 / (XD + XTR + XL + 1e-5)
d0 = math.asin(P / p_pre)
dmax = math.pi - math.asin(P / p_post)
dc = math.acos((P * (dmax - d0) + p_post * math.cos(dmax)) / p_post)
cct = math.sqrt(4 * H * (dc - d0) / (2 * math.pi * case.f_hz * P))

for tc in np.arange(0.15, 0.25, 0.01):
    print(f"clear after {tc:.2f} s: {'stable' if stable(tc) else 'loses step'}")
print(f"equal-area critical clearing time: {cct:.4f} s")
