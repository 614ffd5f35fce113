import math

import numpy as np
import pytest

from islanding.grid import Event, EventSchedule
from islanding.workflow import apply_islanding, coherency_from_ks, groups_per_island, split_events

from conftest import mirrored_case

# mid-transient pairs beyond 90 degrees give clamped couplings
pytestmark = pytest.mark.filterwarnings("ignore:clamped:RuntimeWarning")


@pytest.fixture(scope="module")
def case1_run(case39, case1_events):
    return apply_islanding(case39, case1_events)


def test_split_events_drops_later_events_on_cut_branches(case1_events):
    sched, dropped = split_events(case1_events, 2.7, [26, 3])
    assert dropped == (Event(3.0, "fault_on_line", 26), Event(3.4, "clear_and_open_line", 26))
    assert [(e.time, e.kind, e.branch) for e in sched] == [
        (2.0, "fault_on_line", 6), (2.4, "clear_and_open_line", 6),
        (2.7, "open_line", 3), (2.7, "open_line", 26)]


def test_split_events_keeps_earlier_events(case1_events):
    sched, dropped = split_events(case1_events, 3.5, [6, 26])
    assert dropped == ()
    assert len(sched) == 6


def test_stable_run_is_not_split():
    run = apply_islanding(mirrored_case(), horizon=1.0)
    assert not run.base_report.unstable
    assert run.split is None and run.split_time is None
    assert math.isnan(run.spread_after_split())


def test_lead_must_be_positive(case39):
    with pytest.raises(ValueError):
        apply_islanding(case39, lead=0.0, horizon=0.1)


def test_case1_split_time_precedes_detection(case1_run):
    rep = case1_run.base_report
    assert rep.unstable
    assert case1_run.split_time == pytest.approx(rep.t_loss - 0.1, abs=1e-9)


def test_case1_islands_hold_one_group_each(case39, case1_run):
    res, coh = case1_run.result, case1_run.coherency
    per = groups_per_island(res, case39, coh.groups)
    assert sorted(g for isl in per for g in isl) == list(range(len(coh.groups)))
    assert all(len(isl) == 1 for isl in per)


def test_case1_split_run_stays_in_step(case1_run):
    assert not case1_run.split_report.unstable
    assert case1_run.spread_after_split() < math.pi
    opened = {e.branch for _, e in case1_run.split.events if e.kind == "open_line"}
    assert opened == set(case1_run.result.cutset.branch_ids())


def test_split_run_matches_base_run_before_the_split(case1_run):
    i = case1_run.snapshot.index
    assert np.array_equal(case1_run.split.delta[: i + 1], case1_run.base.delta[: i + 1])


def test_explicit_k_override(case39, case1_events):
    run = apply_islanding(case39, case1_events, k=3)
    assert run.coherency.k == 3 and len(run.result.partition) == 3


def test_coherency_k_max_default_leaves_grouping(case39):
    from islanding.coherency import ks_matrix, psync_matrix
    from islanding.powerflow import kron_reduce, solve_power_flow
    ks = ks_matrix(psync_matrix(kron_reduce(case39, solve_power_flow(case39))))
    k, groups = coherency_from_ks(ks)
    assert 2 <= k <= 9 and len(groups) == k
