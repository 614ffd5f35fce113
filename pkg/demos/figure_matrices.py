"""The printed 39-bus flow matrix and coupling matrix, run through the library.

The flow matrix reproduces the three-line cut value exactly. Grouping the
printed coupling matrix recovers nine of ten machines. Islanding the flow
matrix itself fails: most buses carry no printed flow, so the constrained
Laplacian has a large null space and the clustering cannot tell the
generator groups apart.
"""

import itertools
import warnings

import numpy as np

from islanding import DATA_DIR
from islanding.coherency import KsMatrix, read_groups, read_label_matrix, spectral_coherency, symmetrize
from islanding.grid import generator_bus_map, load_case, load_events, topology_at
from islanding.partition import (
    DEGREE_FLOOR,
    ConstraintViolation,
    Partition,
    build_constraints,
    build_graph,
    constrained_embedding,
    cutset,
    island,
    normalized_laplacian,
    projection_basis,
)
from islanding.powerflow import read_smatrix_csv

BLOCKS = [
    {4, 14, 15, 16, 19, 20, 21, 22, 23, 24, 33, 34, 35, 36},
    {1, 5, 6, 7, 8, 9, 10, 11, 12, 13, 31, 32, 39},
    {2, 3, 17, 18, 25, 26, 27, 28, 29, 30, 37, 38},
]

case = load_case(DATA_DIR / "case39")
case = topology_at(case, load_events(DATA_DIR / "case1_events.csv", case))
sm = read_smatrix_csv(DATA_DIR / "fig2_smatrix.csv", case.base_mva)
g = build_graph(sm, case)

cut = cutset(Partition(BLOCKS), g)
print("cut of the printed blocks:")
for e in cut.edges:
    print(f"  {e.a:2d}-{e.b:2d}  {e.weight:6.0f} kVA")
print(f"  total {cut.total_kva:.0f} kVA")

vals, labels = read_label_matrix(DATA_DIR / "fig7_ks.csv")
print(f"\ncoupling matrix symmetric as printed: {np.allclose(vals, vals.T)}")
groups = spectral_coherency(symmetrize(KsMatrix(vals, labels)), 3)
truth = [{"G1", "G2", "G3"}, {"G4", "G5", "G6", "G7"}, {"G8", "G9", "G10"}]
best = max(sum(len(set(a) & b) for a, b in zip(groups, p)) for p in itertools.permutations(truth))
print(f"groups at k = 3: {[list(x) for x in groups]}  ({best}/10 as printed)")

groups = read_groups(DATA_DIR / "fig2_groups.txt")
w = g.adjacency()
print(f"\nbuses with no printed flow: {int((w.sum(axis=1) == 0).sum())} of {len(w)}")
cons = build_constraints(groups, generator_bus_map(case), case=case)
emb = constrained_embedding(normalized_laplacian(w, g.nodes, degree_floor=DEGREE_FLOOR),
                            projection_basis(cons, g.nodes), 8)
print(f"smallest constrained eigenvalues: {np.array2string(emb.eigenvalues, precision=1)}")
try:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        island(sm, case, groups)
except ConstraintViolation as exc:
    print(f"island: {exc}")
