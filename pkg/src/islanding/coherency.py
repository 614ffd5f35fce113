"""Coherent generator groups from synchronizing power coefficients.

The coupling graph weights each generator pair by its synchronizing power
coefficient evaluated on the reduced network; the weights are normalized to
the Ks matrix and split by spectral clustering of its normalized Laplacian.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import natural_sorted
from .partition import DEGREE_FLOOR, farthest_first, kmedoids
from .powerflow import ReducedNetwork
from .spectral import NormalizedLaplacian, normalized_laplacian, sym_eigh

__all__ = [
    "PsyncMatrix", "KsMatrix", "CoherencyGroups", "psync_matrix", "ks_matrix",
    "normalized_laplacian", "choose_k", "spectral_coherency", "symmetrize",
    "read_label_matrix", "write_label_matrix", "read_groups", "write_groups",
]


@dataclass(frozen=True)
class PsyncMatrix:
    values: np.ndarray
    labels: tuple[str, ...]
    sign_flipped: bool = False
    clamped: int = 0


@dataclass(frozen=True)
class KsMatrix:
    values: np.ndarray
    labels: tuple[str, ...]


@dataclass(frozen=True)
class CoherencyGroups:
    groups: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        groups = tuple(tuple(natural_sorted(g)) for g in self.groups)
        if any(len(g) == 0 for g in groups):
            raise ValueError("empty coherent group")
        flat = [x for g in groups for x in g]
        if len(flat) != len(set(flat)):
            raise ValueError("coherent groups overlap")
        order = natural_sorted(g[0] for g in groups)
        groups = tuple(sorted(groups, key=lambda g: order.index(g[0])))
        object.__setattr__(self, "groups", groups)

    def __len__(self):
        return len(self.groups)

    def __iter__(self):
        return iter(self.groups)

    def group_of(self, label: str) -> int:
        for i, g in enumerate(self.groups):
            if label in g:
                return i
        raise KeyError(label)


def psync_matrix(red: ReducedNetwork) -> PsyncMatrix:
    """Pairwise |E'_i||E'_j| (-B_ij) cos(delta_i - delta_j), sign-normalized.

    The admittance sign convention is read off the susceptances alone: if at
    least 90% of the nonzero off-diagonal -B_ij are negative, the matrix uses
    the opposite convention and the result is negated. Pairs that are still
    negative (angle separation beyond 90 degrees) are clamped to zero.
    """
    e = np.asarray(red.e_mag, dtype=float)
    b = np.imag(red.y)
    b = 0.5 * (b + b.T)
    mask = ~np.eye(len(e), dtype=bool)
    nb = -b[mask]
    nz = nb[nb != 0]
    flipped = bool(nz.size and np.count_nonzero(nz < 0) >= 0.9 * nz.size)
    dd = np.subtract.outer(red.delta, red.delta)
    p = np.outer(e, e) * (-b) * np.cos(dd)
    if flipped:
        p = -p
    np.fill_diagonal(p, 0.0)
    neg = int(np.count_nonzero(p < 0)) // 2
    if neg:
        warnings.warn(f"clamped {neg} negative synchronizing coefficient(s) to zero", RuntimeWarning)
        p = np.where(p < 0, 0.0, p)
    return PsyncMatrix(p, tuple(red.labels), flipped, neg)


def ks_matrix(p: PsyncMatrix) -> KsMatrix:
    """Off-diagonal magnitudes divided by their maximum; unit diagonal."""
    a = np.abs(np.asarray(p.values, dtype=float))
    mask = ~np.eye(a.shape[0], dtype=bool)
    top = a[mask].max(initial=0.0)
    if top == 0:
        raise ValueError("synchronizing matrix has no nonzero coupling")
    ks = np.where(mask, a / top, 1.0)
    return KsMatrix(ks, tuple(p.labels))


def symmetrize(ks: KsMatrix) -> KsMatrix:
    return KsMatrix(0.5 * (ks.values + ks.values.T), ks.labels)


def _weights(ks: KsMatrix) -> np.ndarray:
    w = np.array(ks.values, dtype=float)
    np.fill_diagonal(w, 0.0)
    return w


def choose_k(l: NormalizedLaplacian, k_max: int) -> int:
    """Eigengap choice: argmax over k in 2..k_max of lambda_{k+1} - lambda_k.

    The spectrum is padded with 2 (the upper bound of a normalized
    Laplacian) so k may equal the node count. Ties pick the smaller k.
    """
    n = l.values.shape[0]
    if not 2 <= k_max <= n:
        raise ValueError(f"k_max must lie in [2, {n}]")
    lam, _ = sym_eigh(l.values)
    lam = np.append(lam, 2.0)
    gaps = [lam[k] - lam[k - 1] for k in range(2, k_max + 1)]
    return 2 + int(np.argmax(gaps))


def spectral_coherency(ks: KsMatrix, k: int) -> CoherencyGroups:
    """Group generators by k-medoids on the row-normalized spectral embedding."""
    m = len(ks.labels)
    if not 2 <= k <= m:
        raise ValueError(f"k must lie in [2, {m}]")
    lap = normalized_laplacian(_weights(ks), ks.labels, degree_floor=DEGREE_FLOOR)
    _, vecs = sym_eigh(lap.values)
    emb = vecs[:, :k]
    norms = np.linalg.norm(emb, axis=1, keepdims=True)
    emb = np.divide(emb, norms, out=np.zeros_like(emb), where=norms > 0)
    labels = kmedoids(emb, k, farthest_first(emb, k))
    groups = [tuple(ks.labels[i] for i in range(m) if labels[i] == c) for c in range(k)]
    return CoherencyGroups(tuple(g for g in groups if g))


# ---------------------------------------------------------------------------
# files

def write_label_matrix(values: np.ndarray, labels: Sequence[str], path, fmt: str = ".10g") -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([""] + list(labels))
        for lab, row in zip(labels, values):
            w.writerow([lab] + [format(float(x), fmt) for x in row])


def read_label_matrix(path) -> tuple[np.ndarray, tuple[str, ...]]:
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    cols = [c.strip() for c in rows[0][1:]]
    labels = tuple(r[0].strip() for r in rows[1:])
    if list(cols) != list(labels):
        raise ValueError(f"{path}: row and column labels differ")
    vals = np.array([[float(x) for x in r[1:]] for r in rows[1:]])
    return vals, labels


def write_groups(groups: CoherencyGroups, path) -> None:
    with open(path, "w") as fh:
        for g in groups:
            fh.write(",".join(g) + "\n")


def read_groups(path) -> CoherencyGroups:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    return CoherencyGroups(tuple(tuple(x.strip() for x in ln.split(",")) for ln in lines))
