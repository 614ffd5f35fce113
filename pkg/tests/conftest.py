import math
from pathlib import Path

import numpy as np
import pytest

from islanding import DATA_DIR
from islanding.grid import Branch, Bus, Event, EventSchedule, Generator, GridCase, load_case, load_events

FIXTURES = Path(__file__).resolve().parent / "fixtures"

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def case39():
    return load_case(DATA_DIR / "case39")


@pytest.fixture(scope="session")
def case1_events(case39):
    return load_events(DATA_DIR / "case1_events.csv", case39)


def two_bus_case(p_load=0.8, q_load=0.3, r=0.01, x=0.1, b_ch=0.0):
    """Slack machine feeding one PQ load over a single line."""
    buses = [Bus(1, "slack", 1.0), Bus(2, "PQ", p_load=p_load, q_load=q_load)]
    branches = [Branch(1, 1, 2, r, x, b_ch)]
    gens = [Generator("G1", 1, 0.0, 1.0, 5.0, 0.2)]
    return GridCase(100.0, buses, branches, gens)


def star_case(x1=0.1, x2=0.15, xd1=0.2, xd2=0.25, p_load=1.0, q_load=0.2):
    """Two machines on buses 1 and 2 feeding a centre load at bus 3, lossless lines."""
    buses = [Bus(1, "slack", 1.02), Bus(2, "PV", 1.01), Bus(3, "PQ", p_load=p_load, q_load=q_load)]
    branches = [Branch(1, 1, 3, 0.0, x1), Branch(2, 2, 3, 0.0, x2)]
    gens = [Generator("G1", 1, 0.0, 1.02, 6.0, xd1), Generator("G2", 2, 0.5, 1.01, 4.0, xd2)]
    return GridCase(100.0, buses, branches, gens)


def smib_case(p=0.8, h=5.0, xd=0.25, x_tr=0.1, x_line=0.5):
    """Machine G1 behind a transformer and two parallel lines to a stiff source G2.

    G2 stands in for the infinite bus: huge inertia, tiny reactance.
    """
    buses = [Bus(1, "PV", 1.0), Bus(2, "PQ"), Bus(3, "slack", 1.0)]
    branches = [Branch(1, 1, 2, 0.0, x_tr), Branch(2, 2, 3, 0.0, x_line), Branch(3, 2, 3, 0.0, x_line)]
    gens = [Generator("G1", 1, p, 1.0, h, xd), Generator("G2", 3, 0.0, 1.0, 1e7, 1e-5)]
    return GridCase(100.0, buses, branches, gens)


def mirrored_case(p=0.5, x=0.3, xd=0.2, h=4.0):
    """Two identical machines either side of a machine-less slack bus, opposite outputs."""
    buses = [Bus(1, "PV", 1.0), Bus(2, "slack", 1.0), Bus(3, "PV", 1.0)]
    branches = [Branch(1, 1, 2, 0.0, x), Branch(2, 2, 3, 0.0, x)]
    gens = [Generator("G1", 1, p, 1.0, h, xd), Generator("G2", 3, -p, 1.0, h, xd)]
    return GridCase(100.0, buses, branches, gens)


def fault_schedule(branch, t_fault, t_clear):
    return EventSchedule((Event(t_fault, "fault_on_line", branch), Event(t_clear, "clear_and_open_line", branch)))


def random_connected_weights(rng, n, p_extra=0.3, low=0.1, high=1.0):
    """Symmetric weight matrix of a random connected graph (spanning tree plus extras)."""
    w = np.zeros((n, n))
    order = rng.permutation(n)
    for i in range(1, n):
        a, b = order[i], order[rng.integers(0, i)]
        w[a, b] = w[b, a] = rng.uniform(low, high)
    for a in range(n):
        for b in range(a + 1, n):
            if w[a, b] == 0 and rng.random() < p_extra:
                w[a, b] = w[b, a] = rng.uniform(low, high)
    return w


def equal_area_cct(p_m, p_pre, p_post, h, f_hz=60.0):
    """Critical clearing time of a SMIB with zero electrical output while faulted."""
    d0 = math.asin(p_m / p_pre)
    dmax = math.pi - math.asin(p_m / p_post)
    cos_dc = (p_m * (dmax - d0) + p_post * math.cos(dmax)) / p_post
    dc = math.acos(cos_dc)
    w_s = 2 * math.pi * f_hz
    return math.sqrt(4 * h * (dc - d0) / (w_s * p_m))


def constrained_cut_instance(rng, n_max=10):
    """Random connected graph with two anchored groups holding 1 to 3 must-link pairs."""
    from itertools import combinations

    from islanding.partition import ConstraintSet, WeightedGraph

    n = int(rng.integers(4, n_max + 1))
    w = random_connected_weights(rng, n)
    nodes = tuple(range(1, n + 1))
    weights = {(a + 1, b + 1): w[a, b] for a in range(n) for b in range(a + 1, n) if w[a, b] > 0}
    g = WeightedGraph(nodes, weights)
    sizes = [(2, 1), (1, 2), (2, 2), (3, 1), (1, 3)][int(rng.integers(0, 5))]
    picked = [int(x) + 1 for x in rng.choice(n, sum(sizes), replace=False)]
    groups = [sorted(picked[:sizes[0]]), sorted(picked[sizes[0]:])]
    ml = {p for grp in groups for p in combinations(grp, 2)}
    seeds = [grp[0] for grp in groups]
    cons = ConstraintSet(frozenset(ml), frozenset({tuple(sorted(seeds))}))
    return g, groups, seeds, cons


def brute_force_min_cut(g, cons):
    """Exhaustive constrained minimum over all bipartitions (connectivity not required)."""
    nodes = list(g.nodes)
    n = len(nodes)
    best = float("inf")
    for mask in range(1 << (n - 1)):
        side = {nodes[i]: (mask >> i) & 1 for i in range(n - 1)}
        side[nodes[-1]] = 1
        if all(side.values()):
            continue
        if any(side[a] != side[b] for a, b in cons.ml_pairs):
            continue
        if any(side[a] == side[b] for a, b in cons.cl_pairs):
            continue
        best = min(best, sum(wt for (a, b), wt in g.weights.items() if side[a] != side[b]))
    return best


def smib_parameters(case, traj):
    """(p_m, p_pre, p_post, h) of the SMIB fixture, from the simulated initial state."""
    xd1, xd2 = case.generators[0].xd_p, case.generators[1].xd_p
    x_tr, x_line = case.branch(1).x, case.branch(2).x
    e1e2 = traj.e_mag[0] * traj.e_mag[1]
    p_pre = e1e2 / (xd1 + x_tr + x_line / 2 + xd2)
    p_post = e1e2 / (xd1 + x_tr + x_line + xd2)
    return traj.p_m[0], p_pre, p_post, case.generators[0].h


def smib_cct_bisection(case, t_fault=0.1, lo=0.0, hi=0.6, tol=1e-3, dt=1e-3, settle=3.0):
    """Critical clearing time of a fault on branch 3 found by bisection on the simulator."""
    from islanding.dynamics import detect_loss_of_sync, simulate

    def stable(tc):
        ev = fault_schedule(3, t_fault, t_fault + tc)
        traj = simulate(case, ev, horizon=t_fault + tc + settle, dt=dt)
        return not detect_loss_of_sync(traj).unstable

    assert stable(lo + dt) and not stable(hi)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stable(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
