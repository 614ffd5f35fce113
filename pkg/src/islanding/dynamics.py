"""Classical-model multi-machine transient simulation.

Constant EMF behind transient reactance, constant mechanical power and
constant-impedance loads. The network is Kron-reduced onto the internal
nodes and rebuilt whenever the topology changes; the swing equations are
integrated with fixed-step RK4.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Event, EventSchedule, GridCase, connected_components
from .powerflow import (
    ReducedNetwork,
    SMatrix,
    apparent_power_matrix,
    branch_flows_at,
    equivalent_load_admittance,
    internal_emfs,
    reduce_network,
    solve_power_flow,
)

FAULT_ADMITTANCE = 1e6


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class MachineState:
    labels: tuple[str, ...]
    delta: np.ndarray
    omega: np.ndarray
    e_mag: np.ndarray
    p_m: np.ndarray


@dataclass
class Segment:
    """Interval of constant topology starting at grid index ``start``."""

    start: int
    case: GridCase
    faults: dict
    y_red: np.ndarray
    to_bus: np.ndarray
    islands: tuple[tuple[int, ...], ...]


@dataclass
class Trajectories:
    t: np.ndarray
    delta: np.ndarray
    omega: np.ndarray
    labels: tuple[str, ...]
    e_mag: np.ndarray
    p_m: np.ndarray
    dt: float
    segments: list[Segment]
    events: tuple[tuple[int, Event], ...]
    island_spread: np.ndarray = field(default=None)

    def segment_at(self, index: int) -> Segment:
        seg = self.segments[0]
        for s in self.segments:
            if s.start <= index:
                seg = s
        return seg

    def bus_voltages(self, index: int) -> np.ndarray:
        seg = self.segment_at(index)
        return seg.to_bus @ (self.e_mag * np.exp(1j * self.delta[index]))


@dataclass(frozen=True)
class SyncLossReport:
    unstable: bool
    t_loss: float | None = None
    index: int | None = None


@dataclass(frozen=True)
class Snapshot:
    time: float
    index: int
    state: MachineState
    reduced: ReducedNetwork
    smatrix: SMatrix
    case: GridCase
    voltage: np.ndarray


def _islands(case: GridCase) -> tuple[tuple[int, ...], ...]:
    comps = connected_components(case.bus_ids, [b.ends for b in case.branches if b.status])
    out = []
    for comp in comps:
        gens = tuple(i for i, g in enumerate(case.generators) if g.bus in comp)
        if gens:
            out.append(gens)
    return tuple(out)


def _spread(delta: np.ndarray, islands) -> float:
    return max((float(delta[list(isl)].max() - delta[list(isl)].min()) for isl in islands), default=0.0)


def _fault_shunts(case: GridCase, faults: dict, fault_end: str) -> dict:
    shunts: dict = {}
    for bid in faults:
        br = case.branch(bid)
        bus = br.from_bus if fault_end == "from" else br.to_bus
        shunts[bus] = shunts.get(bus, 0) + FAULT_ADMITTANCE
    return shunts


def simulate(case: GridCase, events: EventSchedule | None = None, horizon: float = 8.0,
             dt: float = 1e-3, fault_end: str = "from", omega0=None) -> Trajectories:
    """Integrate the swing equations over [0, horizon].

    Events are applied at the grid point nearest their time, before the step
    that leaves it. A fault adds a large shunt at the faulted branch's
    ``fault_end`` bus until the branch is opened. ``omega0`` optionally
    perturbs the initial speeds (rad/s).
    """
    events = events or EventSchedule()
    if dt > 5e-3 or dt <= 0:
        raise ValueError("dt must lie in (0, 5 ms]")
    if fault_end not in ("from", "to"):
        raise ValueError("fault_end must be 'from' or 'to'")
    if len(events) and horizon < max(e.time for e in events):
        raise ValueError("horizon ends before the last event")
    sol = solve_power_flow(case)
    if not sol.converged:
        raise SimulationError(f"initial power flow did not converge (mismatch {sol.max_mismatch:.2e})")
    m = len(case.generators)
    if m == 0:
        raise SimulationError("case has no generators")
    y_load = equivalent_load_admittance(case, sol)
    emf = internal_emfs(case, sol)
    e_mag, delta0 = np.abs(emf), np.angle(emf)
    w_s = 2 * math.pi * case.f_hz
    h = np.array([g.h * g.mva_base / case.base_mva for g in case.generators])
    d = np.array([g.d * g.mva_base / case.base_mva for g in case.generators])

    n_steps = int(round(horizon / dt))
    by_step: dict[int, list[Event]] = {}
    for ev in events:
        by_step.setdefault(int(round(ev.time / dt)), []).append(ev)

    def build(index, topo, faults):
        y_red, to_bus = reduce_network(topo, y_load, _fault_shunts(topo, faults, fault_end), drop_dead=True)
        return Segment(index, topo, dict(faults), y_red, to_bus, _islands(topo))

    topo, faults = case, {}
    seg = build(0, topo, faults)
    e0 = e_mag * np.exp(1j * delta0)
    p_m = np.real(e0 * np.conj(seg.y_red @ e0))

    delta = np.empty((n_steps + 1, m))
    omega = np.empty((n_steps + 1, m))
    spread = np.empty(n_steps + 1)
    delta[0] = delta0
    omega[0] = 0.0 if omega0 is None else np.asarray(omega0, dtype=float)
    segments = [seg]
    applied = []

    def rhs(dl, om, y):
        e = e_mag * np.exp(1j * dl)
        pe = np.real(e * np.conj(y @ e))
        return om, (w_s / (2 * h)) * (p_m - pe - d * om / w_s)

    for n in range(n_steps):
        if n in by_step and n > 0 or (n == 0 and 0 in by_step):
            open_ids = []
            for ev in by_step[n]:
                br = topo.branch(ev.branch)
                if ev.kind == "fault_on_line":
                    if not br.status:
                        raise SimulationError(f"fault on open branch {ev.branch}")
                    faults[ev.branch] = True
                elif ev.kind in ("clear_and_open_line", "open_line"):
                    if not br.status:
                        raise SimulationError(f"event references removed branch {ev.branch}")
                    faults.pop(ev.branch, None)
                    open_ids.append(ev.branch)
                else:
                    raise SimulationError(f"unknown event kind {ev.kind!r}")
                applied.append((n, ev))
            if open_ids:
                topo = topo.with_branch_status(open_ids, False)
            seg = build(n, topo, faults)
            segments.append(seg)
        spread[n] = _spread(delta[n], seg.islands)
        y = seg.y_red
        dl, om = delta[n], omega[n]
        k1d, k1w = rhs(dl, om, y)
        k2d, k2w = rhs(dl + 0.5 * dt * k1d, om + 0.5 * dt * k1w, y)
        k3d, k3w = rhs(dl + 0.5 * dt * k2d, om + 0.5 * dt * k2w, y)
        k4d, k4w = rhs(dl + dt * k3d, om + dt * k3w, y)
        delta[n + 1] = dl + dt / 6 * (k1d + 2 * k2d + 2 * k3d + k4d)
        omega[n + 1] = om + dt / 6 * (k1w + 2 * k2w + 2 * k3w + k4w)
    spread[n_steps] = _spread(delta[n_steps], seg.islands)

    return Trajectories(
        t=np.arange(n_steps + 1) * dt, delta=delta, omega=omega,
        labels=tuple(g.id for g in case.generators), e_mag=e_mag, p_m=p_m, dt=dt,
        segments=segments, events=tuple(applied), island_spread=spread,
    )


def detect_loss_of_sync(traj: Trajectories, threshold: float = math.pi) -> SyncLossReport:
    """First grid time at which some island's rotor-angle spread exceeds ``threshold``."""
    over = np.flatnonzero(traj.island_spread > threshold)
    if over.size == 0:
        return SyncLossReport(False)
    i = int(over[0])
    return SyncLossReport(True, float(traj.t[i]), i)


def nearest_index(traj: Trajectories, t: float) -> int:
    if t < traj.t[0] - 1e-12 or t > traj.t[-1] + 1e-12:
        raise ValueError(f"time {t} outside the simulated horizon [0, {traj.t[-1]}]")
    return int(min(max(round(t / traj.dt), 0), len(traj.t) - 1))


def snapshot_at(traj: Trajectories, t: float) -> Snapshot:
    """Machine state, reduced network and bus apparent flows at the grid point nearest ``t``."""
    i = nearest_index(traj, t)
    seg = traj.segment_at(i)
    state = MachineState(traj.labels, traj.delta[i].copy(), traj.omega[i].copy(),
                         traj.e_mag.copy(), traj.p_m.copy())
    red = ReducedNetwork(traj.labels, seg.y_red, traj.e_mag.copy(), traj.delta[i].copy(), seg.to_bus)
    v = traj.bus_voltages(i)
    sm = apparent_power_matrix(seg.case, branch_flows_at(seg.case, v))
    return Snapshot(float(traj.t[i]), i, state, red, sm, seg.case, v)


def angle_correlation(traj: Trajectories, t_end: float, window: float = 0.5) -> tuple[np.ndarray, tuple[int, ...]]:
    """Pearson correlation of bus voltage-angle series over the trailing ``window``."""
    i1 = nearest_index(traj, t_end)
    i0 = max(0, i1 - int(round(window / traj.dt)))
    ang = np.array([np.unwrap(np.angle(traj.bus_voltages(i))) for i in range(i0, i1 + 1)])
    ang = np.unwrap(ang, axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(ang.T)
    corr = np.nan_to_num(corr, nan=0.0)
    np.fill_diagonal(corr, 1.0)
    return corr, tuple(traj.segments[0].case.bus_ids)


def write_traj_csv(traj: Trajectories, path, every: int = 1) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_s"] + [f"delta_{g}_deg" for g in traj.labels] + [f"omega_{g}" for g in traj.labels])
        for i in range(0, len(traj.t), every):
            w.writerow([f"{traj.t[i]:.6f}"] + [f"{x:.6f}" for x in np.degrees(traj.delta[i])]
                       + [f"{x:.8f}" for x in traj.omega[i]])
