"""Steady-state network algebra.

Bus admittance assembly, Newton-Raphson power flow in polar form, branch
flows from the pi model, the bus-by-bus apparent power matrix that weights
the islanding graph, and Kron reduction onto generator internal nodes.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .grid import Branch, GridCase, connected_components


class PowerFlowError(RuntimeError):
    """Numerical failure in the network solution (singular matrix)."""


@dataclass(frozen=True)
class AdmittanceMatrix:
    values: np.ndarray
    bus_ids: tuple[int, ...]

    def entry(self, a: int, b: int) -> complex:
        return self.values[self.bus_ids.index(a), self.bus_ids.index(b)]


@dataclass(frozen=True)
class PowerFlowSolution:
    bus_ids: tuple[int, ...]
    v_mag: np.ndarray
    v_ang: np.ndarray
    converged: bool
    iterations: int
    max_mismatch: float

    @property
    def voltage(self) -> np.ndarray:
        return self.v_mag * np.exp(1j * self.v_ang)


@dataclass(frozen=True)
class BranchFlow:
    branch: int
    from_bus: int
    to_bus: int
    p_from: float
    q_from: float
    p_to: float
    q_to: float

    @property
    def s_from(self) -> float:
        return float(np.hypot(self.p_from, self.q_from))

    @property
    def s_to(self) -> float:
        return float(np.hypot(self.p_to, self.q_to))


@dataclass(frozen=True)
class SMatrix:
    """Symmetric bus-by-bus apparent power flow matrix.

    ``unit`` is ``"pu"`` (system base) or ``"kVA"``.
    """

    bus_ids: tuple[int, ...]
    values: np.ndarray
    unit: str = "pu"
    base_mva: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "bus_ids", tuple(int(b) for b in self.bus_ids))
        if self.unit not in ("pu", "kVA"):
            raise ValueError(f"unknown unit {self.unit!r}")

    def index(self, bus: int) -> int:
        return self.bus_ids.index(bus)

    def get(self, a: int, b: int) -> float:
        return float(self.values[self.index(a), self.index(b)])

    def kva_factor(self) -> float:
        return 1.0 if self.unit == "kVA" else self.base_mva * 1000.0

    def in_kva(self) -> "SMatrix":
        return SMatrix(self.bus_ids, self.values * self.kva_factor(), "kVA", self.base_mva)


@dataclass(frozen=True)
class ReducedNetwork:
    """Network seen from the generator internal nodes.

    ``to_bus`` maps internal EMFs to bus voltages (V_bus = to_bus @ E) for the
    same topology, which is how mid-transient bus quantities are recovered.
    """

    labels: tuple[str, ...]
    y: np.ndarray
    e_mag: np.ndarray
    delta: np.ndarray
    to_bus: np.ndarray | None = None

    @property
    def emf(self) -> np.ndarray:
        return self.e_mag * np.exp(1j * self.delta)


# ---------------------------------------------------------------------------
# admittance matrix

def _series(br: Branch) -> complex:
    return 1.0 / complex(br.r, br.x)


def build_ybus(case: GridCase, extra_shunts: Mapping[int, complex] | None = None) -> AdmittanceMatrix:
    """Bus admittance matrix of in-service branches plus bus shunts."""
    n = case.n_bus
    y = np.zeros((n, n), dtype=complex)
    for br in case.branches:
        if not br.status:
            continue
        i, j = case.bus_index(br.from_bus), case.bus_index(br.to_bus)
        ys = _series(br)
        half = 0.5j * br.b_ch
        y[i, i] += ys + half
        y[j, j] += ys + half
        y[i, j] -= ys
        y[j, i] -= ys
    for k, bus in enumerate(case.buses):
        y[k, k] += complex(bus.g_sh, bus.b_sh)
    for bus_id, ysh in (extra_shunts or {}).items():
        k = case.bus_index(bus_id)
        y[k, k] += ysh
    return AdmittanceMatrix(y, tuple(case.bus_ids))


# ---------------------------------------------------------------------------
# Newton-Raphson

def _scheduled_injection(case: GridCase) -> np.ndarray:
    s = np.array([-complex(b.p_load, b.q_load) for b in case.buses])
    for g in case.generators:
        s[case.bus_index(g.bus)] += g.p_set
    return s


def _jacobian(y: np.ndarray, v: np.ndarray, pvpq: np.ndarray, pq: np.ndarray) -> np.ndarray:
    i = y @ v
    vnorm = v / np.abs(v)
    ds_dvm = np.diag(v) @ np.conj(y @ np.diag(vnorm)) + np.diag(np.conj(i) * vnorm)
    ds_dva = 1j * np.diag(v) @ np.conj(np.diag(i) - y @ np.diag(v))
    return np.block([
        [ds_dva[np.ix_(pvpq, pvpq)].real, ds_dvm[np.ix_(pvpq, pq)].real],
        [ds_dva[np.ix_(pq, pvpq)].imag, ds_dvm[np.ix_(pq, pq)].imag],
    ])


def solve_power_flow(case: GridCase, tol: float = 1e-8, max_iter: int = 50) -> PowerFlowSolution:
    """Full Newton-Raphson from a flat start.

    Converged means the largest active/reactive mismatch is below ``tol`` pu.
    On non-convergence the best iterate seen is returned with
    ``converged=False``. A singular Jacobian raises PowerFlowError.
    """
    y = build_ybus(case).values
    kinds = [b.kind for b in case.buses]
    pv = np.array([k for k, kind in enumerate(kinds) if kind == "PV"], dtype=int)
    pq = np.array([k for k, kind in enumerate(kinds) if kind == "PQ"], dtype=int)
    pvpq = np.concatenate([pv, pq]).astype(int)
    vm = np.ones(case.n_bus)
    for k, b in enumerate(case.buses):
        if b.kind != "PQ":
            vm[k] = b.v_mag
    for g in case.generators:
        k = case.bus_index(g.bus)
        if kinds[k] != "PQ":
            vm[k] = g.v_set
    va = np.zeros(case.n_bus)
    s_sched = _scheduled_injection(case)

    def mismatch(vm, va):
        v = vm * np.exp(1j * va)
        mis = v * np.conj(y @ v) - s_sched
        return v, np.concatenate([mis[pvpq].real, mis[pq].imag])

    v, f = mismatch(vm, va)
    norm = float(np.max(np.abs(f))) if f.size else 0.0
    best = (norm, vm.copy(), va.copy(), 0)
    it = 0
    while norm >= tol and it < max_iter:
        jac = _jacobian(y, v, pvpq, pq)
        try:
            dx = scipy.linalg.solve(jac, -f)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise PowerFlowError(f"singular Jacobian at iteration {it + 1}") from exc
        if not np.all(np.isfinite(dx)):
            raise PowerFlowError(f"singular Jacobian at iteration {it + 1}")
        npv = len(pvpq)
        va[pvpq] += dx[:npv]
        vm[pq] += dx[npv:]
        it += 1
        v, f = mismatch(vm, va)
        norm = float(np.max(np.abs(f))) if f.size else 0.0
        if not np.isfinite(norm):
            break
        if norm < best[0]:
            best = (norm, vm.copy(), va.copy(), it)
    if norm < tol:
        return PowerFlowSolution(tuple(case.bus_ids), vm, va, True, it, norm)
    return PowerFlowSolution(tuple(case.bus_ids), best[1], best[2], False, it, best[0])


def bus_injections(case: GridCase, voltage: np.ndarray) -> np.ndarray:
    """Net complex power injected at every bus (pu)."""
    y = build_ybus(case).values
    return voltage * np.conj(y @ voltage)


def generator_output(case: GridCase, sol: PowerFlowSolution) -> dict[str, complex]:
    """Complex output of each generator: bus injection plus the bus's own load."""
    s = bus_injections(case, sol.voltage)
    out = {}
    for g in case.generators:
        k = case.bus_index(g.bus)
        out[g.id] = complex(s[k] + complex(case.buses[k].p_load, case.buses[k].q_load))
    return out


# ---------------------------------------------------------------------------
# branch quantities

def branch_flows_at(case: GridCase, voltage: np.ndarray) -> list[BranchFlow]:
    """Pi-model end flows for arbitrary bus voltages; open branches carry nothing."""
    flows = []
    for br in case.branches:
        if not br.status:
            flows.append(BranchFlow(br.id, br.from_bus, br.to_bus, 0.0, 0.0, 0.0, 0.0))
            continue
        vf = voltage[case.bus_index(br.from_bus)]
        vt = voltage[case.bus_index(br.to_bus)]
        ys = _series(br)
        half = 0.5j * br.b_ch
        i_f = (ys + half) * vf - ys * vt
        i_t = (ys + half) * vt - ys * vf
        sf = vf * np.conj(i_f)
        st = vt * np.conj(i_t)
        flows.append(BranchFlow(br.id, br.from_bus, br.to_bus,
                                float(sf.real), float(sf.imag), float(st.real), float(st.imag)))
    return flows


def branch_flows(case: GridCase, sol: PowerFlowSolution) -> list[BranchFlow]:
    return branch_flows_at(case, sol.voltage)


def apparent_power_matrix(case: GridCase, flows: Iterable[BranchFlow]) -> SMatrix:
    """Edge weight per bus pair: the larger end apparent power, summed over parallel branches."""
    n = case.n_bus
    s = np.zeros((n, n))
    for fl in flows:
        i, j = case.bus_index(fl.from_bus), case.bus_index(fl.to_bus)
        w = max(fl.s_from, fl.s_to)
        s[i, j] += w
        s[j, i] += w
    return SMatrix(tuple(case.bus_ids), s, "pu", case.base_mva)


# ---------------------------------------------------------------------------
# Kron reduction

def kron_eliminate(y: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Eliminate every node not in ``keep``: Y_kk - Y_ke Y_ee^-1 Y_ek."""
    keep = np.asarray(keep, dtype=int)
    drop = np.setdiff1d(np.arange(y.shape[0]), keep)
    if drop.size == 0:
        return y[np.ix_(keep, keep)].copy()
    y_ee = y[np.ix_(drop, drop)]
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(y_ee, check_finite=True)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise PowerFlowError("singular elimination block") from exc
    if np.any(np.abs(np.diag(lu[0])) < 1e-14 * max(1.0, np.abs(y_ee).max())):
        raise PowerFlowError("singular elimination block (isolated subnetwork without generators?)")
    return y[np.ix_(keep, keep)] - y[np.ix_(keep, drop)] @ scipy.linalg.lu_solve(lu, y[np.ix_(drop, keep)])


def equivalent_load_admittance(case: GridCase, sol: PowerFlowSolution) -> np.ndarray:
    """Constant-impedance equivalent of every bus's load, y = (P - jQ)/|V|^2.

    Generator buses use their own load; other buses use the negated solved
    injection, which equals the load at PQ buses and also absorbs a slack
    bus that carries no machine.
    """
    v = sol.voltage
    s_inj = bus_injections(case, v)
    gen_buses = {g.bus for g in case.generators}
    s_load = np.empty(case.n_bus, dtype=complex)
    for k, b in enumerate(case.buses):
        s_load[k] = complex(b.p_load, b.q_load) if b.id in gen_buses else -s_inj[k]
    return np.conj(s_load) / np.abs(v) ** 2


def transient_reactance(case: GridCase) -> np.ndarray:
    """x'd of each generator on the system base."""
    return np.array([g.xd_p * case.base_mva / g.mva_base for g in case.generators])


def internal_emfs(case: GridCase, sol: PowerFlowSolution) -> np.ndarray:
    """E' = V_t + j x'd I_gen from the solved terminal conditions."""
    out = generator_output(case, sol)
    xd = transient_reactance(case)
    v = sol.voltage
    e = np.empty(len(case.generators), dtype=complex)
    for i, g in enumerate(case.generators):
        vt = v[case.bus_index(g.bus)]
        e[i] = vt + 1j * xd[i] * np.conj(out[g.id] / vt)
    return e


def extended_admittance(case: GridCase, y_load: np.ndarray,
                        extra_shunts: Mapping[int, complex] | None = None) -> np.ndarray:
    """Bus admittance with loads as shunts, bordered by the generator internal nodes.

    Internal nodes come first (generator order), then buses (case order).
    """
    yb = build_ybus(case, extra_shunts).values + np.diag(y_load)
    m, n = len(case.generators), case.n_bus
    yx = np.zeros((m + n, m + n), dtype=complex)
    yx[m:, m:] = yb
    for i, (g, x) in enumerate(zip(case.generators, transient_reactance(case))):
        k = m + case.bus_index(g.bus)
        yg = 1.0 / (1j * x)
        yx[i, i] += yg
        yx[k, k] += yg
        yx[i, k] -= yg
        yx[k, i] -= yg
    return yx


def reduce_network(case: GridCase, y_load: np.ndarray,
                   extra_shunts: Mapping[int, complex] | None = None,
                   drop_dead: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Reduced admittance over internal nodes and the EMF-to-bus-voltage map.

    With ``drop_dead`` the buses of connected components holding no generator
    are left out of the elimination; their rows of the voltage map are zero.
    """
    m = len(case.generators)
    yx = extended_admittance(case, y_load, extra_shunts)
    live = np.arange(case.n_bus)
    if drop_dead:
        gen_buses = {g.bus for g in case.generators}
        comps = connected_components(case.bus_ids, [b.ends for b in case.branches if b.status])
        alive = {b for comp in comps if gen_buses & set(comp) for b in comp}
        live = np.array([k for k, b in enumerate(case.bus_ids) if b in alive], dtype=int)
    rows = np.concatenate([np.arange(m), m + live])
    ys = yx[np.ix_(rows, rows)]
    y_red = kron_eliminate(ys, range(m))
    to_bus = np.zeros((case.n_bus, m), dtype=complex)
    to_bus[live] = -scipy.linalg.solve(ys[m:, m:], ys[m:, :m])
    return y_red, to_bus


def kron_reduce(case: GridCase, sol: PowerFlowSolution) -> ReducedNetwork:
    """Classical-model reduction of the solved case to generator internal nodes."""
    if not sol.converged:
        raise PowerFlowError("Kron reduction needs a converged power flow")
    e = internal_emfs(case, sol)
    y_red, to_bus = reduce_network(case, equivalent_load_admittance(case, sol))
    return ReducedNetwork(tuple(g.id for g in case.generators), y_red, np.abs(e), np.angle(e), to_bus)


# ---------------------------------------------------------------------------
# files

def write_flows_csv(case: GridCase, flows: Iterable[BranchFlow], path) -> None:
    base = case.base_mva
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["branch_id", "from", "to", "p_from_mw", "q_from_mvar", "s_from_mva",
                    "p_to_mw", "q_to_mvar", "s_to_mva"])
        for f in flows:
            w.writerow([f.branch, f.from_bus, f.to_bus,
                        f"{f.p_from * base:.6f}", f"{f.q_from * base:.6f}", f"{f.s_from * base:.6f}",
                        f"{f.p_to * base:.6f}", f"{f.q_to * base:.6f}", f"{f.s_to * base:.6f}"])


def write_smatrix_csv(sm: SMatrix, path) -> None:
    """Square matrix in kVA with a bus-id header row and column."""
    kva = sm.in_kva()
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["bus"] + list(kva.bus_ids))
        for b, row in zip(kva.bus_ids, kva.values):
            w.writerow([b] + [f"{x:.3f}" for x in row])


def read_smatrix_csv(path, base_mva: float = 100.0) -> SMatrix:
    """Read a kVA matrix; rows/columns may list buses in any (matching) order."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    header = [int(h) for h in rows[0][1:]]
    ids = [int(r[0]) for r in rows[1:]]
    if sorted(header) != sorted(ids):
        raise ValueError(f"{path}: row and column bus ids differ")
    vals = np.zeros((len(ids), len(ids)))
    for i, r in enumerate(rows[1:]):
        for j, cell in enumerate(r[1:]):
            cell = cell.strip()
            vals[i, j] = float(cell) if cell else 0.0
    vals = vals[:, [header.index(b) for b in ids]]
    if not np.allclose(vals, vals.T):
        raise ValueError(f"{path}: matrix is not symmetric")
    return SMatrix(tuple(ids), vals, "kVA", base_mva)
