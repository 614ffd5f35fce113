"""Snapshot-to-islands pipeline and the split-and-continue simulation run."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .coherency import (
    CoherencyGroups,
    KsMatrix,
    PsyncMatrix,
    choose_k,
    ks_matrix,
    normalized_laplacian,
    psync_matrix,
    spectral_coherency,
)
from .grid import Event, EventSchedule, GridCase
from .partition import DEGREE_FLOOR, IslandingResult, island
from .powerflow import bus_injections
from .dynamics import (
    Snapshot,
    SyncLossReport,
    Trajectories,
    detect_loss_of_sync,
    simulate,
    snapshot_at,
)


@dataclass(frozen=True)
class CoherencyResult:
    psync: PsyncMatrix
    ks: KsMatrix
    k: int
    groups: CoherencyGroups


def coherency_from_ks(ks: KsMatrix, k: int | None = None, k_max: int | None = None) -> tuple[int, CoherencyGroups]:
    """Group count (eigengap unless ``k`` is given) and the resulting groups.

    ``k_max`` defaults to one less than the number of generators, since
    k equal to the machine count leaves every machine on its own.
    """
    m = len(ks.labels)
    if k is None:
        w = np.array(ks.values, dtype=float)
        np.fill_diagonal(w, 0.0)
        lap = normalized_laplacian(w, ks.labels, degree_floor=DEGREE_FLOOR)
        k = choose_k(lap, max(2, m - 1) if k_max is None else k_max)
    return k, spectral_coherency(ks, k)


def coherency_at(snap: Snapshot, k: int | None = None, k_max: int | None = None) -> CoherencyResult:
    p = psync_matrix(snap.reduced)
    ks = ks_matrix(p)
    k, groups = coherency_from_ks(ks, k, k_max)
    return CoherencyResult(p, ks, k, groups)


def snapshot_injections(snap: Snapshot) -> dict[int, complex]:
    """Net complex injection per bus at the snapshot voltages (pu)."""
    s = bus_injections(snap.case, snap.voltage)
    return {b: complex(x) for b, x in zip(snap.case.bus_ids, s)}


def island_at(snap: Snapshot, groups: CoherencyGroups, keep: Iterable[int] = ()) -> IslandingResult:
    return island(snap.smatrix, snap.case, groups, keep, snapshot_injections(snap))


@dataclass(frozen=True)
class IslandingRun:
    """Unsplit run, the split decision and the continued run."""

    base: Trajectories
    base_report: SyncLossReport
    split_time: float | None
    snapshot: Snapshot | None
    coherency: CoherencyResult | None
    result: IslandingResult | None
    dropped: tuple[Event, ...]
    split: Trajectories | None
    split_report: SyncLossReport | None

    def spread_after_split(self) -> float:
        """Largest per-island rotor-angle spread after the split (rad)."""
        if self.split is None:
            return float("nan")
        return float(self.split.island_spread[self.snapshot.index + 1:].max())


def split_events(events: EventSchedule, split_time: float, branches: Iterable[int]) -> tuple[EventSchedule, tuple[Event, ...]]:
    """Schedule with the cut branches opened at ``split_time``.

    Later events on a cut branch are dropped: the branch is already out.
    """
    cut = set(branches)
    kept, dropped = [], []
    for ev in events:
        if ev.time >= split_time and ev.branch in cut:
            dropped.append(ev)
        else:
            kept.append(ev)
    opens = [Event(split_time, "open_line", b) for b in sorted(cut)]
    return EventSchedule(tuple(kept)).extended(opens), tuple(dropped)


def apply_islanding(case: GridCase, events: EventSchedule | None = None, horizon: float = 8.0,
                    dt: float = 1e-3, lead: float = 0.1, at_time: float | None = None,
                    k: int | None = None, k_max: int | None = None,
                    keep: Iterable[int] = ()) -> IslandingRun:
    """Simulate, split at ``at_time`` (or detector time minus ``lead``) and continue.

    If no split time is given and the base run stays in step, no split is made.
    """
    if lead <= 0:
        raise ValueError("lead must be positive")
    events = events or EventSchedule()
    base = simulate(case, events, horizon, dt)
    rep = detect_loss_of_sync(base)
    if at_time is None:
        if not rep.unstable:
            return IslandingRun(base, rep, None, None, None, None, (), None, None)
        at_time = max(rep.t_loss - lead, 0.0)
    snap = snapshot_at(base, at_time)
    coh = coherency_at(snap, k, k_max)
    res = island_at(snap, coh.groups, keep)
    schedule, dropped = split_events(events, snap.time, res.cutset.branch_ids())
    tr = simulate(case, schedule, horizon, dt)
    return IslandingRun(base, rep, snap.time, snap, coh, res, dropped, tr, detect_loss_of_sync(tr))


def groups_per_island(res: IslandingResult, case: GridCase, groups: CoherencyGroups) -> list[list[int]]:
    """For each island, the indices of the coherent groups with a machine in it."""
    lab = res.partition.label_of()
    bus = {g.id: g.bus for g in case.generators}
    out = [set() for _ in res.partition.islands]
    for gi, grp in enumerate(groups):
        for label in grp:
            out[lab[bus[label]]].add(gi)
    return [sorted(s) for s in out]
