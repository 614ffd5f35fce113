"""Command-line front end: ``islanding pf|coherency|island|simulate``.

Every command writes into a scratch directory first and moves the files into
``--out`` only after the whole command succeeded, so a failure leaves no
partial output behind.

Exit codes: 0 success, 1 numeric failure, 2 constraint violation,
3 input or I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import shutil
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from . import DATA_DIR
from .coherency import (
    KsMatrix,
    read_groups,
    read_label_matrix,
    symmetrize,
    write_groups,
    write_label_matrix,
)
from .dynamics import (
    SimulationError,
    angle_correlation,
    detect_loss_of_sync,
    simulate,
    snapshot_at,
    write_traj_csv,
)
from .grid import CaseError, EventSchedule, load_case, load_events, topology_at, write_events
from .partition import (
    ConstraintViolation,
    PartitionError,
    build_graph,
    island,
    write_islands_dot,
    write_partition_json,
)
from .powerflow import (
    PowerFlowError,
    apparent_power_matrix,
    branch_flows,
    read_smatrix_csv,
    solve_power_flow,
    write_flows_csv,
    write_smatrix_csv,
)
from .spectral import EigenError
from .workflow import apply_islanding, coherency_at, coherency_from_ks, island_at

EXIT_OK, EXIT_NUMERIC, EXIT_CONSTRAINT, EXIT_INPUT = 0, 1, 2, 3


class NumericFailure(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# helpers

def _case(args):
    return load_case(args.case)


def _events(args, case):
    return load_events(args.events, case) if args.events else EventSchedule()


def _keep_ids(args, case) -> list[int]:
    if not args.keep:
        return []
    ids = []
    for item in args.keep.split(","):
        try:
            a, b = (int(x) for x in item.strip().split("-"))
        except ValueError:
            raise CaseError(f"--keep expects A-B bus pairs, got {item!r}") from None
        ids.append(case.find_branch(a, b).id)
    return sorted(set(ids))


def _snapshot(args, case):
    """Snapshot at --at-time, or at detector time minus --lead, or the static case."""
    events = _events(args, case)
    if args.at_time is None and not len(events):
        tr = simulate(case, None, horizon=0.0, dt=args.dt)
        return tr, snapshot_at(tr, 0.0)
    tr = simulate(case, events, args.horizon, args.dt)
    t = args.at_time
    if t is None:
        rep = detect_loss_of_sync(tr, math.radians(args.threshold_deg))
        if not rep.unstable:
            raise NumericFailure("no loss of synchronism within the horizon; pass --at-time")
        t = max(rep.t_loss - args.lead, 0.0)
    return tr, snapshot_at(tr, t)


def _sync_summary(rep, traj, threshold_deg) -> dict:
    return {
        "unstable": rep.unstable,
        "t_loss_s": rep.t_loss,
        "threshold_deg": threshold_deg,
        "max_island_spread_deg": round(float(np.degrees(traj.island_spread.max())), 6),
        "final_islands": [[traj.labels[i] for i in isl] for isl in traj.segments[-1].islands],
    }


def _write_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_correlation(corr, buses, path) -> None:
    write_label_matrix(corr, [str(b) for b in buses], path, fmt=".6f")


# ---------------------------------------------------------------------------
# commands

def cmd_pf(args, out: Path) -> None:
    case = _case(args)
    sol = solve_power_flow(case)
    if not sol.converged:
        raise NumericFailure(f"power flow did not converge after {sol.iterations} iterations "
                             f"(mismatch {sol.max_mismatch:.3e} pu)")
    flows = branch_flows(case, sol)
    write_flows_csv(case, flows, out / "flows.csv")
    write_smatrix_csv(apparent_power_matrix(case, flows), out / "smatrix.csv")
    print(f"converged in {sol.iterations} iterations, max mismatch {sol.max_mismatch:.3e} pu")


def cmd_coherency(args, out: Path) -> None:
    if args.ks_file:
        vals, labels = read_label_matrix(args.ks_file)
        ks = symmetrize(KsMatrix(vals, labels))
        k, groups = coherency_from_ks(ks, args.k, args.k_max)
    else:
        case = _case(args)
        _, snap = _snapshot(args, case)
        res = coherency_at(snap, args.k, args.k_max)
        ks, k, groups = res.ks, res.k, res.groups
        write_label_matrix(res.psync.values, res.psync.labels, out / "psync.csv")
        print(f"snapshot at t = {snap.time:.3f} s")
    write_label_matrix(ks.values, ks.labels, out / "ks.csv")
    write_groups(groups, out / "groups.txt")
    print(f"k = {k}: " + " | ".join(",".join(g) for g in groups))


def cmd_island(args, out: Path) -> None:
    case = _case(args)
    keep = _keep_ids(args, case)
    traj = None
    if args.smatrix_file:
        # lines switched out by the schedule are absent from the graph
        case = topology_at(case, _events(args, case), args.at_time)
        sm = read_smatrix_csv(args.smatrix_file, case.base_mva)
        if args.groups_file:
            groups = read_groups(args.groups_file)
        elif args.ks_file:
            vals, labels = read_label_matrix(args.ks_file)
            _, groups = coherency_from_ks(symmetrize(KsMatrix(vals, labels)), args.k, args.k_max)
        else:
            raise CaseError("--smatrix-file needs --groups-file or --ks-file")
        res = island(sm, case, groups, keep)
        graph = build_graph(sm, case)
    else:
        traj, snap = _snapshot(args, case)
        groups = read_groups(args.groups_file) if args.groups_file else coherency_at(snap, args.k, args.k_max).groups
        res = island_at(snap, groups, keep)
        graph = build_graph(snap.smatrix, snap.case)
        print(f"snapshot at t = {snap.time:.3f} s")
        if snap.time > 0:
            corr, buses = angle_correlation(traj, snap.time, args.window)
            _write_correlation(corr, buses, out / "angle_correlation.csv")
    write_groups(groups, out / "groups.txt")
    write_partition_json(res, out / "partition.json", groups)
    write_islands_dot(res, graph, out / "islands.dot")
    print(f"{len(res.partition.islands)} islands, cut branches {res.cutset.branch_ids()}, "
          f"disruption {res.cutset.total_kva:.1f} kVA")


def cmd_simulate(args, out: Path) -> None:
    case = _case(args)
    events = _events(args, case)
    thr = math.radians(args.threshold_deg)
    if not args.apply_islanding:
        tr = simulate(case, events, args.horizon, args.dt)
        rep = detect_loss_of_sync(tr, thr)
        write_traj_csv(tr, out / "traj.csv")
        _write_json({"run": _sync_summary(rep, tr, args.threshold_deg)}, out / "sync.json")
        print("loss of synchronism at t = %.3f s" % rep.t_loss if rep.unstable else "stable")
        return
    run = apply_islanding(case, events, args.horizon, args.dt, args.lead, args.at_time,
                          args.k, args.k_max, _keep_ids(args, case))
    write_traj_csv(run.base, out / "traj.csv")
    summary = {"run": _sync_summary(run.base_report, run.base, args.threshold_deg)}
    if run.split is not None:
        write_traj_csv(run.split, out / "traj_islanded.csv")
        write_groups(run.coherency.groups, out / "groups.txt")
        write_partition_json(run.result, out / "partition.json", run.coherency.groups)
        schedule = EventSchedule(tuple(ev for _, ev in run.split.events))
        write_events(schedule, out / "events_islanded.csv")
        summary["islanded"] = _sync_summary(run.split_report, run.split, args.threshold_deg)
        summary["islanded"].update({
            "split_time_s": run.split_time,
            "cut_branches": run.result.cutset.branch_ids(),
            "dropped_events": [[ev.time, ev.kind, ev.branch] for ev in run.dropped],
            "max_spread_after_split_deg": round(math.degrees(run.spread_after_split()), 6),
        })
        print(f"split at t = {run.split_time:.3f} s on branches {run.result.cutset.branch_ids()}; "
              f"max island spread afterwards {math.degrees(run.spread_after_split()):.1f} deg")
    else:
        print("stable without islanding; no split applied")
    _write_json(summary, out / "sync.json")


COMMANDS = {"pf": cmd_pf, "coherency": cmd_coherency, "island": cmd_island, "simulate": cmd_simulate}


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--case", default=str(DATA_DIR / "case39"), help="case directory (default: bundled 39-bus case)")
    shared.add_argument("--events", help="event schedule CSV")
    shared.add_argument("--out", default=".", help="output directory")
    shared.add_argument("--k", type=int, help="number of coherent groups (default: eigengap)")
    shared.add_argument("--k-max", type=int, help="largest k the eigengap may pick (default: generator count minus one)")
    shared.add_argument("--at-time", type=float, help="snapshot or split time, s")
    shared.add_argument("--lead", type=float, default=0.1, help="split this long before loss of synchronism, s")
    shared.add_argument("--dt", type=float, default=1e-3, help="integration step, s")
    shared.add_argument("--horizon", type=float, default=8.0, help="simulated time, s")
    shared.add_argument("--threshold-deg", type=float, default=180.0, help="loss-of-synchronism angle spread")
    shared.add_argument("--window", type=float, default=0.5, help="angle-correlation window, s")
    shared.add_argument("--keep", help="lines that may not be cut, as A-B[,C-D...] bus pairs")
    shared.add_argument("--ks-file", help="Ks matrix CSV to group instead of a computed one")
    shared.add_argument("--smatrix-file", help="apparent-power matrix CSV (kVA) to partition")
    shared.add_argument("--groups-file", help="coherent groups, one comma-separated group per line")
    shared.add_argument("--apply-islanding", action="store_true",
                        help="split at loss of synchronism minus --lead and continue the run")
    p = argparse.ArgumentParser(prog="islanding", description="Coherency-constrained controlled islanding.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("pf", parents=[shared], help="AC power flow; writes flows.csv and smatrix.csv")
    sub.add_parser("coherency", parents=[shared], help="coherent generator groups; writes psync.csv, ks.csv, groups.txt")
    sub.add_parser("island", parents=[shared], help="constrained partition; writes partition.json, islands.dot")
    sub.add_parser("simulate", parents=[shared], help="swing simulation; writes traj.csv and sync.json")
    return p


def _validate(args) -> None:
    if args.lead <= 0:
        raise CaseError("--lead must be positive")
    if not 0 < args.dt <= 5e-3:
        raise CaseError("--dt must lie in (0, 0.005]")
    if args.at_time is not None and not 0 <= args.at_time <= args.horizon:
        raise CaseError("--at-time must lie within the horizon")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        _validate(args)
        with tempfile.TemporaryDirectory(prefix="islanding-") as tmp:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                COMMANDS[args.command](args, Path(tmp))
            for w in caught:
                print(f"warning: {w.message}", file=sys.stderr)
            out.mkdir(parents=True, exist_ok=True)
            if not os.access(out, os.W_OK):
                raise PermissionError(f"output directory {out} is not writable")
            for f in sorted(Path(tmp).iterdir()):
                shutil.copyfile(f, out / f.name)
    except ConstraintViolation as exc:
        print(f"constraint violation: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except (NumericFailure, PowerFlowError, EigenError, SimulationError, PartitionError,
            np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CaseError, KeyError, ValueError, OSError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
