import itertools
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from islanding import DATA_DIR
from islanding.coherency import (
    CoherencyGroups,
    KsMatrix,
    PsyncMatrix,
    choose_k,
    ks_matrix,
    normalized_laplacian,
    psync_matrix,
    read_groups,
    read_label_matrix,
    spectral_coherency,
    symmetrize,
    write_groups,
    write_label_matrix,
)
from islanding.powerflow import ReducedNetwork, kron_reduce, solve_power_flow
from islanding.spectral import EigenError, fix_signs, sym_eigh

from conftest import star_case


def scalar_psync(y, e, delta):
    m = len(e)
    out = [[0.0] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            if i != j:
                out[i][j] = e[i] * e[j] * (-y[i][j].imag) * math.cos(delta[i] - delta[j])
    return out


def random_reduced(rng, m):
    """Reduced network of a random lossless star: every machine tied to a common node."""
    ys = 1 / (1j * rng.uniform(0.1, 1.0, m))
    tot = ys.sum() + 0.5
    y = np.diag(ys) - np.outer(ys, ys) / tot
    return ReducedNetwork(tuple(f"G{i + 1}" for i in range(m)), y,
                          rng.uniform(0.9, 1.2, m), rng.uniform(-0.6, 0.6, m))


def block_weights(rng, sizes, inter=0.1):
    n = sum(sizes)
    lab = np.repeat(np.arange(len(sizes)), sizes)
    w = np.where(lab[:, None] == lab[None, :], rng.uniform(0.5, 1.0, (n, n)),
                 rng.uniform(0.0, inter * 0.5, (n, n)))
    w = np.triu(w, 1)
    return w + w.T, lab


# --- psync / ks -------------------------------------------------------------

def test_psync_star_matches_scalar_evaluation():
    case = star_case()
    red = kron_reduce(case, solve_power_flow(case))
    p = psync_matrix(red)
    ref = np.array(scalar_psync(red.y.tolist(), red.e_mag.tolist(), red.delta.tolist()))
    # inductive network: raw -B_ij comes out negative, so the convention flip applies
    assert p.sign_flipped
    assert np.allclose(p.values, -ref, rtol=0, atol=1e-10)


def test_psync_case39_matches_scalar_evaluation(case39):
    red = kron_reduce(case39, solve_power_flow(case39))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p = psync_matrix(red)
    ref = np.clip(-np.array(scalar_psync(red.y.tolist(), red.e_mag.tolist(), red.delta.tolist())), 0, None)
    assert np.allclose(p.values, ref, rtol=0, atol=1e-10)


def test_psync_unit_pair_and_quadrature():
    y = np.array([[-1j, 1j], [1j, -1j]])
    p = psync_matrix(ReducedNetwork(("G1", "G2"), -y, np.ones(2), np.zeros(2)))
    assert not p.sign_flipped
    assert p.values[0, 1] == pytest.approx(1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        p = psync_matrix(ReducedNetwork(("G1", "G2"), -y, np.ones(2), np.array([0.0, math.pi / 2])))
    assert abs(p.values[0, 1]) < 1e-15


def test_psync_flips_inductive_convention():
    y = np.array([[-1j, 1j], [1j, -1j]])
    p = psync_matrix(ReducedNetwork(("G1", "G2"), y, np.ones(2), np.zeros(2)))
    assert p.sign_flipped and p.values[0, 1] == pytest.approx(1.0)


def test_psync_clamps_with_warning():
    y = -np.array([[-2j, 1j, 1j], [1j, -2j, 1j], [1j, 1j, -2j]])
    red = ReducedNetwork(("G1", "G2", "G3"), y, np.ones(3), np.array([0.0, 0.1, 2.5]))
    with pytest.warns(RuntimeWarning, match="clamped"):
        p = psync_matrix(red)
    assert p.clamped == 2
    assert p.values.min() == 0.0


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_psync_symmetric_and_nonnegative(m, seed):
    red = random_reduced(np.random.default_rng(seed), m)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p = psync_matrix(red).values
    assert np.abs(p - p.T).max() < 1e-10
    assert p.min() >= 0 and np.all(np.diag(p) == 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 8), st.integers(0, 2**32 - 1), st.floats(0.1, 10.0))
def test_psync_scales_with_emf_squared(m, seed, c):
    red = random_reduced(np.random.default_rng(seed), m)
    scaled = ReducedNetwork(red.labels, red.y, red.e_mag * c, red.delta)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        a, b = psync_matrix(red).values, psync_matrix(scaled).values
    assert np.allclose(b, c * c * a, rtol=1e-12, atol=1e-12)


def test_ks_max_normalization():
    p = np.zeros((3, 3))
    p[0, 2] = p[2, 0] = 5.0
    ks = ks_matrix(PsyncMatrix(p, ("G1", "G2", "G3")))
    assert ks.values[0, 2] == 1.0 and ks.values[0, 1] == 0.0
    assert np.all(np.diag(ks.values) == 1.0)


def test_ks_all_zero_rejected():
    with pytest.raises(ValueError):
        ks_matrix(PsyncMatrix(np.zeros((3, 3)), ("G1", "G2", "G3")))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_ks_scale_invariant(seed, c):
    red = random_reduced(np.random.default_rng(seed), 5)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        p = psync_matrix(red)
    a = ks_matrix(p).values
    b = ks_matrix(PsyncMatrix(p.values * c, p.labels)).values
    assert np.allclose(a, b, rtol=1e-12)


# --- laplacian / eigen ------------------------------------------------------

def test_laplacian_k2():
    lap = normalized_laplacian(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert np.allclose(lap.values, [[1, -1], [-1, 1]])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_laplacian_null_vector(n, seed):
    rng = np.random.default_rng(seed)
    w = np.triu(rng.uniform(0.1, 1.0, (n, n)), 1)
    w = w + w.T
    lap = normalized_laplacian(w)
    vals, vecs = sym_eigh(lap.values)
    assert abs(vals[0]) < 1e-8 and vals.min() > -1e-9
    u = np.sqrt(w.sum(axis=1))
    u /= np.linalg.norm(u)
    assert abs(abs(vecs[:, 0] @ u) - 1) < 1e-8


def test_laplacian_two_cliques_double_zero():
    w = np.zeros((6, 6))
    w[:3, :3] = 1
    w[3:, 3:] = 1
    np.fill_diagonal(w, 0)
    vals, _ = sym_eigh(normalized_laplacian(w).values)
    assert np.allclose(vals[:2], 0, atol=1e-10) and vals[2] > 0.5


def test_laplacian_isolated_node():
    w = np.zeros((3, 3))
    w[0, 1] = w[1, 0] = 1
    with pytest.raises(ValueError, match="isolated"):
        normalized_laplacian(w)
    lap = normalized_laplacian(w, degree_floor=1e-9)
    assert np.all(lap.values[2] == 0)


@pytest.mark.parametrize("w", [
    np.array([[0.0, 1.0], [0.5, 0.0]]),
    np.array([[0.0, -1.0], [-1.0, 0.0]]),
    np.array([[1.0, 1.0], [1.0, 0.0]]),
])
def test_laplacian_rejects_bad_weights(w):
    with pytest.raises(ValueError):
        normalized_laplacian(w)


def test_sign_fix_is_deterministic():
    v = np.array([[0.2, -0.9], [-0.5, 0.1]])
    out = fix_signs(v)
    assert out[1, 0] > 0 and out[0, 1] > 0


def test_sym_eigh_residual_check():
    with pytest.raises(EigenError):
        sym_eigh(np.array([[1.0, np.nan], [np.nan, 1.0]]))


def test_choose_k_three_cliques():
    w = np.zeros((9, 9))
    for b in range(3):
        w[3 * b:3 * b + 3, 3 * b:3 * b + 3] = 1
    np.fill_diagonal(w, 0)
    assert choose_k(normalized_laplacian(w), 5) == 3


def test_choose_k_planted_four_blocks():
    w, _ = block_weights(np.random.default_rng(4), [4, 5, 3, 4], inter=0.02)
    assert choose_k(normalized_laplacian(w), 8) == 4


def test_choose_k_bounds():
    lap = normalized_laplacian(np.array([[0.0, 1.0], [1.0, 0.0]]))
    assert choose_k(lap, 2) == 2
    with pytest.raises(ValueError):
        choose_k(lap, 3)


# --- spectral coherency -----------------------------------------------------

def _ks(w):
    v = w.copy()
    np.fill_diagonal(v, 1.0)
    return KsMatrix(v, tuple(f"G{i + 1}" for i in range(len(w))))


def _same_partition(groups, lab, labels):
    mine = {frozenset(g) for g in groups}
    truth = {frozenset(labels[i] for i in np.flatnonzero(lab == c)) for c in np.unique(lab)}
    return mine == truth


def test_planted_three_blocks_recovered():
    rng = np.random.default_rng(2024)
    hits = 0
    for _ in range(200):
        sizes = list(rng.integers(2, 6, 3))
        w, lab = block_weights(rng, sizes, inter=0.1)
        ks = _ks(w)
        k = choose_k(normalized_laplacian(w), min(6, len(w)))
        hits += k == 3 and _same_partition(spectral_coherency(ks, k), lab, ks.labels)
    assert hits >= 190


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=2, max_size=4), st.integers(0, 2**32 - 1))
def test_components_are_returned(sizes, seed):
    rng = np.random.default_rng(seed)
    w, lab = block_weights(rng, sizes, inter=0.0)
    ks = _ks(w)
    assert _same_partition(spectral_coherency(ks, len(sizes)), lab, ks.labels)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0))
def test_grouping_scale_invariant(seed, c):
    rng = np.random.default_rng(seed)
    w, _ = block_weights(rng, [3, 3, 4], inter=0.3)
    a = spectral_coherency(_ks(w), 3)
    b = spectral_coherency(_ks(w * c), 3)
    assert a == b


def test_grouping_follows_relabeling():
    rng = np.random.default_rng(7)
    w, _ = block_weights(rng, [3, 4, 3], inter=0.05)
    labels = tuple(f"G{i + 1}" for i in range(10))
    base = spectral_coherency(KsMatrix(w + np.eye(10), labels), 3)
    perm = rng.permutation(10)
    shuffled = KsMatrix(w[np.ix_(perm, perm)] + np.eye(10), tuple(labels[i] for i in perm))
    assert {frozenset(g) for g in spectral_coherency(shuffled, 3)} == {frozenset(g) for g in base}


def test_figure_ks_groups():
    vals, labels = read_label_matrix(DATA_DIR / "fig7_ks.csv")
    assert labels == tuple(f"G{i}" for i in range(1, 11))
    assert not np.allclose(vals, vals.T)
    ks = symmetrize(KsMatrix(vals, labels))
    groups = spectral_coherency(ks, 3)
    truth = [{"G1", "G2", "G3"}, {"G4", "G5", "G6", "G7"}, {"G8", "G9", "G10"}]
    best = max(sum(len(set(g) & t) for g, t in zip(groups, perm))
               for perm in itertools.permutations(truth))
    assert best >= 8


def test_groups_validation_and_order():
    g = CoherencyGroups((("G10", "G8"), ("G2", "G1")))
    assert g.groups == (("G1", "G2"), ("G8", "G10"))
    assert g.group_of("G10") == 1
    with pytest.raises(ValueError):
        CoherencyGroups((("G1",), ("G1", "G2")))


def test_files_round_trip(tmp_path):
    g = CoherencyGroups((("G1", "G2", "G3"), ("G4",)))
    write_groups(g, tmp_path / "g.txt")
    assert read_groups(tmp_path / "g.txt") == g
    m = np.array([[1.0, 0.25], [0.25, 1.0]])
    write_label_matrix(m, ("G1", "G2"), tmp_path / "m.csv")
    back, labels = read_label_matrix(tmp_path / "m.csv")
    assert labels == ("G1", "G2") and np.array_equal(back, m)
