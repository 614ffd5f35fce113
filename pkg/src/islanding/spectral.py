"""Normalized Laplacian and a deterministic symmetric eigensolver."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg


class EigenError(RuntimeError):
    pass


@dataclass(frozen=True)
class NormalizedLaplacian:
    values: np.ndarray
    nodes: tuple
    degree: np.ndarray


def normalized_laplacian(w, nodes: Sequence | None = None,
                         degree_floor: float | None = None) -> NormalizedLaplacian:
    """Symmetric normalized Laplacian D^-1/2 (D - W) D^-1/2.

    ``degree_floor`` only enters the normalization, so a zero-degree node gets
    an all-zero row (it is its own component, eigenvalue 0) and the cut term
    D - W is untouched. Without a floor, a zero-degree node is an error.
    """
    w = np.asarray(w, dtype=float)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("weight matrix must be square")
    if not np.allclose(w, w.T, rtol=0, atol=1e-10 * max(1.0, np.abs(w).max(initial=0))):
        raise ValueError("weight matrix must be symmetric")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    if np.any(np.diag(w) != 0):
        raise ValueError("weight matrix must have a zero diagonal")
    n = w.shape[0]
    nodes = tuple(range(n)) if nodes is None else tuple(nodes)
    d = w.sum(axis=1)
    if degree_floor is None:
        if np.any(d <= 0):
            iso = [nodes[i] for i in np.flatnonzero(d <= 0)]
            raise ValueError(f"isolated node(s) with zero degree: {iso}")
    s = 1.0 / np.sqrt(d if degree_floor is None else np.maximum(d, degree_floor))
    lap = s[:, None] * (np.diag(d) - w) * s[None, :]
    lap = 0.5 * (lap + lap.T)
    return NormalizedLaplacian(lap, nodes, d)


def fix_signs(vecs: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry (first on ties) is positive."""
    out = vecs.copy()
    for c in range(out.shape[1]):
        col = out[:, c]
        mag = np.abs(col)
        top = np.flatnonzero(mag >= mag.max() * (1 - 1e-9))[0]
        if col[top] < 0:
            out[:, c] = -col
    return out


def sym_eigh(a: np.ndarray, b: np.ndarray | None = None, tol: float = 1e-9):
    """Eigenpairs of A u = lambda B u, ascending, sign-normalized.

    Raises EigenError if the LAPACK call fails or any residual exceeds
    ``tol`` (scaled by the matrix norm when that exceeds one).
    """
    a = 0.5 * (a + a.T)
    if b is not None:
        b = 0.5 * (b + b.T)
    try:
        vals, vecs = scipy.linalg.eigh(a, b)
    except (scipy.linalg.LinAlgError, ValueError) as exc:
        raise EigenError(str(exc)) from exc
    vecs = fix_signs(vecs)
    rhs = vecs if b is None else b @ vecs
    res = np.linalg.norm(a @ vecs - rhs * vals, axis=0)
    scale = max(1.0, np.linalg.norm(a, 2))
    if np.any(res > tol * scale):
        raise EigenError(f"eigen residual {res.max():.3e} above {tol:g}")
    return vals, vecs
