"""Constrained spectral splitting of the bus graph.

Edges carry apparent power flow. Must-link pairs (coherent generator buses
and the ends of lines that may not be opened) are imposed exactly by
restricting the spectral problem to the subspace of vectors that are equal on
linked buses. Cannot-link pairs are handled by seeding k-medoids with one
representative bus per coherent group and checking the result.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from .grid import GridCase, connected_components, generator_bus_map
from .powerflow import SMatrix
from .spectral import NormalizedLaplacian, normalized_laplacian, sym_eigh

DEGREE_FLOOR = 1e-9


class PartitionError(RuntimeError):
    """The partition could not be produced or repaired."""


class ConstraintViolation(PartitionError):
    """Infeasible constraints or a cannot-link / keep-edge violation."""


def _pair(a, b) -> tuple:
    return (a, b) if a <= b else (b, a)


# ---------------------------------------------------------------------------
# graph

@dataclass(frozen=True)
class WeightedGraph:
    """Undirected bus graph. One edge per connected bus pair; weights >= 0."""

    nodes: tuple[int, ...]
    weights: Mapping[tuple[int, int], float]
    branches: Mapping[tuple[int, int], tuple[int, ...]] = field(default_factory=dict)
    unit: str = "pu"
    kva_factor: float = 1.0

    def __post_init__(self):
        adj: dict[int, list[int]] = {n: [] for n in self.nodes}
        for (a, b), w in self.weights.items():
            if a == b:
                raise ValueError(f"self-loop at {a}")
            if w < 0:
                raise ValueError(f"negative weight on edge {a}-{b}")
            adj[a].append(b)
            adj[b].append(a)
        object.__setattr__(self, "_adj", {n: tuple(sorted(v)) for n, v in adj.items()})
        object.__setattr__(self, "_pos", {n: i for i, n in enumerate(self.nodes)})

    def weight(self, a: int, b: int) -> float:
        return self.weights.get(_pair(a, b), 0.0)

    def has_edge(self, a: int, b: int) -> bool:
        return _pair(a, b) in self.weights

    def neighbors(self, a: int) -> tuple[int, ...]:
        return self._adj[a]

    def index(self, node: int) -> int:
        return self._pos[node]

    def adjacency(self) -> np.ndarray:
        n = len(self.nodes)
        w = np.zeros((n, n))
        for (a, b), x in self.weights.items():
            i, j = self._pos[a], self._pos[b]
            w[i, j] = w[j, i] = x
        return w

    def edges(self):
        return sorted(self.weights)


def build_graph(smatrix: SMatrix, case: GridCase) -> WeightedGraph:
    """One edge per in-service bus connection, weighted from ``smatrix``.

    Connections whose matrix entry is zero stay in the graph (they cut for free).
    """
    if set(smatrix.bus_ids) != set(case.bus_ids) or len(smatrix.bus_ids) != case.n_bus:
        if smatrix.bus_ids or case.branches:
            raise ValueError("apparent power matrix does not match the case buses")
    weights: dict = {}
    branches: dict = {}
    for br in case.branches:
        if not br.status:
            continue
        key = _pair(br.from_bus, br.to_bus)
        weights[key] = smatrix.get(*key)
        branches[key] = branches.get(key, ()) + (br.id,)
    return WeightedGraph(tuple(case.bus_ids), weights, branches, smatrix.unit,
                         1.0 if smatrix.unit == "kVA" else smatrix.kva_factor())


# ---------------------------------------------------------------------------
# constraints

class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            lo, hi = sorted((ra, rb))
            self.parent[hi] = lo


@dataclass(frozen=True)
class ConstraintSet:
    ml_pairs: frozenset = frozenset()
    cl_pairs: frozenset = frozenset()
    keep_edges: frozenset = frozenset()

    def __post_init__(self):
        for name in ("ml_pairs", "cl_pairs"):
            pairs = frozenset(_pair(a, b) for a, b in getattr(self, name))
            if any(a == b for a, b in pairs):
                raise ValueError(f"{name} contains a node paired with itself")
            object.__setattr__(self, name, pairs)
        object.__setattr__(self, "keep_edges", frozenset(self.keep_edges))

    def classes(self, nodes: Iterable[int]) -> list[tuple[int, ...]]:
        """Must-link equivalence classes over ``nodes`` (singletons included)."""
        nodes = list(nodes)
        uf = _UnionFind(nodes)
        for a, b in sorted(self.ml_pairs):
            uf.union(a, b)
        out: dict = {}
        for n in nodes:
            out.setdefault(uf.find(n), []).append(n)
        return sorted((tuple(sorted(c)) for c in out.values()), key=lambda c: c[0])

    def check_feasible(self, nodes: Iterable[int]) -> None:
        nodes = set(nodes)
        for a, b in self.ml_pairs | self.cl_pairs:
            if a not in nodes or b not in nodes:
                raise ConstraintViolation(f"constraint references unknown node in ({a}, {b})")
        cls = {n: c for c in self.classes(nodes) for n in c}
        for a, b in sorted(self.cl_pairs):
            if cls[a] == cls[b]:
                raise ConstraintViolation(f"infeasible constraints: must-link closure joins cannot-link pair ({a}, {b})")


def representative(group: Sequence[str]) -> str:
    """Cannot-link representative of a group: its lowest label as a string."""
    return min(group)


def build_constraints(groups, gmap: Mapping[str, int], keep: Iterable[int] = (),
                      case: GridCase | None = None) -> ConstraintSet:
    """Must-link within groups and across kept lines; cannot-link between group representatives.

    ``keep`` holds branch ids and needs ``case`` to resolve their end buses.
    """
    keep = tuple(keep)
    ml = set()
    for g in groups:
        buses = [gmap[label] for label in g]
        ml.update(_pair(a, b) for a, b in combinations(buses, 2))
    nodes = set(gmap.values())
    if keep:
        if case is None:
            raise ValueError("resolving keep edges needs the case")
        for bid in keep:
            br = case.branch(bid)
            ml.add(_pair(br.from_bus, br.to_bus))
        nodes = set(case.bus_ids)
    reps = [gmap[representative(g)] for g in groups]
    cl = {_pair(a, b) for a, b in combinations(reps, 2)}
    cons = ConstraintSet(frozenset(ml), frozenset(cl), frozenset(keep))
    if case is not None:
        nodes = set(case.bus_ids)
    cons.check_feasible(nodes | {x for p in ml | cl for x in p})
    return cons


# ---------------------------------------------------------------------------
# spectral embedding

@dataclass(frozen=True)
class ProjectionBasis:
    q: np.ndarray
    nodes: tuple[int, ...]


def projection_basis(cons: ConstraintSet, nodes: Sequence[int] | int) -> ProjectionBasis:
    """Orthonormal basis of {x : x_i = x_j for every must-link pair}.

    One column per must-link class: the class indicator scaled to unit norm,
    columns ordered by smallest member.
    """
    if isinstance(nodes, int):
        nodes = tuple(range(nodes))
    nodes = tuple(nodes)
    pos = {n: i for i, n in enumerate(nodes)}
    classes = cons.classes(nodes)
    q = np.zeros((len(nodes), len(classes)))
    for c, members in enumerate(classes):
        for n in members:
            q[pos[n], c] = 1.0 / np.sqrt(len(members))
    return ProjectionBasis(q, nodes)


@dataclass(frozen=True)
class Embedding:
    j: np.ndarray
    eigenvalues: np.ndarray
    nodes: tuple

    @property
    def rows(self) -> np.ndarray:
        return self.j


def constrained_embedding(l: NormalizedLaplacian, q: ProjectionBasis, k: int) -> Embedding:
    """Smallest-k solutions of Q^T L Q u = lambda Q^T Q u, mapped back as J = Q U."""
    p = q.q.shape[1]
    if k > p:
        raise ValueError(f"k={k} exceeds the constrained subspace dimension {p}")
    a = q.q.T @ l.values @ q.q
    b = q.q.T @ q.q
    vals, u = sym_eigh(a, b, tol=1e-8)
    return Embedding(q.q @ u[:, :k], vals[:k], q.nodes)


# ---------------------------------------------------------------------------
# k-medoids

def _pairwise(points: np.ndarray) -> np.ndarray:
    diff = points[:, None, :] - points[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def farthest_first(points: np.ndarray, k: int) -> list[int]:
    """k seed indices: the overall medoid, then repeatedly the point farthest from the chosen ones."""
    d = _pairwise(np.asarray(points, dtype=float))
    seeds = [int(np.argmin(d.sum(axis=1)))]
    while len(seeds) < k:
        gap = d[:, seeds].min(axis=1)
        gap[seeds] = -1.0
        seeds.append(int(np.argmax(gap)))
    return seeds


def kmedoids(points, k: int, seeds: Sequence[int],
             cannot_link: Iterable[tuple[int, int]] = ()) -> np.ndarray:
    """Partitioning Around Medoids started from ``seeds`` (row indices).

    Label c is the cluster grown from ``seeds[c]``. Distance ties go to the
    lower cluster index; among equally good swaps the first found (lowest
    cluster, then lowest row) wins. Swapping stops when no single swap lowers
    the total distance. Swaps whose assignment would put a ``cannot_link``
    pair (row indices) into one cluster are skipped.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    seeds = [int(s) for s in seeds]
    if len(seeds) != k:
        raise ValueError(f"need exactly {k} seeds")
    if len(set(seeds)) != k:
        raise ValueError("duplicate seeds")
    n = len(pts)
    d = _pairwise(pts)
    medoids = list(seeds)

    cl = [(int(a), int(b)) for a, b in cannot_link]

    def cost(meds):
        return d[:, meds].min(axis=1).sum()

    def separated(meds):
        if not cl:
            return True
        lab = np.argmin(d[:, meds], axis=1)
        return all(lab[a] != lab[b] for a, b in cl)

    best = cost(medoids)
    eps = 1e-12 * max(1.0, best)
    while True:
        move = None
        for c in range(k):
            for o in range(n):
                if o in medoids:
                    continue
                trial = medoids.copy()
                trial[c] = o
                tc = cost(trial)
                if tc < best - eps and (move is None or tc < move[0] - eps) and separated(trial):
                    move = (tc, c, o)
        if move is None:
            break
        best, c, o = move
        medoids[c] = o
    return np.argmin(d[:, medoids], axis=1)


# ---------------------------------------------------------------------------
# partition and cutset

@dataclass(frozen=True)
class Partition:
    islands: tuple[frozenset, ...]

    def __post_init__(self):
        object.__setattr__(self, "islands", tuple(frozenset(s) for s in self.islands))

    def __len__(self):
        return len(self.islands)

    def __iter__(self):
        return iter(self.islands)

    def label_of(self) -> dict:
        return {n: i for i, s in enumerate(self.islands) for n in s}

    def as_sets(self) -> set[frozenset]:
        return set(self.islands)


def _induced_components(g: WeightedGraph, members: set) -> list[set]:
    edges = [(a, b) for a, b in g.weights if a in members and b in members]
    return connected_components(sorted(members), edges)


def _bridge(g: WeightedGraph, comps: list[set], blocked: set, movable: dict) -> list[int] | None:
    """Cheapest node path joining comps[0] to any other anchored comp, avoiding ``blocked``.

    Entering a node costs one hop plus a tiny tie-break on its id, so the
    result is deterministic.
    """
    start = comps[0]
    targets = set().union(*comps[1:])
    dist = {n: 0.0 for n in start}
    prev: dict = {}
    heap = [(0.0, n) for n in sorted(start)]
    heapq.heapify(heap)
    while heap:
        dcur, u = heapq.heappop(heap)
        if dcur > dist.get(u, np.inf):
            continue
        if u in targets:
            path = []
            while u in prev:
                u = prev[u]
                if u not in start:
                    path.append(u)
            return path
        for v in g.neighbors(u):
            if v in blocked:
                continue
            nd = dcur + (0.0 if v in targets or v in start else 1.0 + 1e-6 * movable.get(v, 0))
            if nd < dist.get(v, np.inf):
                dist[v] = nd
                prev[v] = u
                heapq.heappush(heap, (nd, v))
    return None


def enforce_connectivity(part: Partition, g: WeightedGraph,
                         anchors: Sequence[Iterable[int]] | None = None,
                         units: Sequence[Iterable[int]] = ()) -> Partition:
    """Make every island induce a connected subgraph.

    ``anchors[i]`` are buses that must stay in island i (coherent generator
    buses). Components of an island holding no anchor are moved, whole, to the
    neighbouring island that raises the cut weight least (lowest island index
    on ties); an unanchored island keeps its largest component. Anchored
    components that are separated are joined by pulling the shortest path of
    unanchored buses into the island. When no such path exists, or two
    islands keep taking the same connector buses from each other, the
    anchored pieces stay apart: constraints outrank connectivity. ``units`` are groups of buses (must-link
    classes) that only move together.
    """
    k = len(part)
    islands = [set(s) for s in part.islands]
    anchors = [set(a) for a in anchors] if anchors is not None else [set() for _ in range(k)]
    pinned = set().union(*anchors) if anchors else set()
    unit_of = {}
    for u in units:
        u = tuple(u)
        for n in u:
            unit_of[n] = u
    seen = set()
    stuck = set()
    for _ in range(4 * len(g.nodes) + 4):
        changed = False
        seen.add(tuple(frozenset(s) for s in islands))
        for i in range(k):
            comps = _induced_components(g, islands[i])
            if len(comps) <= 1:
                continue
            anchored = [c for c in comps if c & anchors[i]]
            path = None
            if len(anchored) > 1 and i not in stuck:
                blocked = {n for j in range(k) if j != i for n in anchors[j]}
                blocked |= {n for n, u in unit_of.items() if set(u) & blocked}
                path = _bridge(g, anchored, blocked, {n: n for n in g.nodes})
            if path is not None:
                moving = set()
                for n in path:
                    moving |= set(unit_of.get(n, (n,)))
                trial = [s_ - moving for s_ in islands]
                trial[i] |= moving
                if tuple(frozenset(s_) for s_ in trial) in seen:
                    # islands competing for the same connector buses: give up on this one
                    stuck.add(i)
                    changed = True
                    break
                islands = trial
                changed = True
                break
            # anchored pieces that no path can join stay where they are
            mains = anchored if anchored else [max(comps, key=lambda c: (len(c), -min(c)))]
            for frag in comps:
                if any(frag is m for m in mains):
                    continue
                here = islands[i] - frag
                options = []
                for j in range(k):
                    if j == i:
                        continue
                    touch = sum(g.weight(a, b) for a in frag for b in g.neighbors(a) if b in islands[j])
                    if any(b in islands[j] for a in frag for b in g.neighbors(a)):
                        leave = sum(g.weight(a, b) for a in frag for b in g.neighbors(a) if b in here)
                        options.append((leave - touch, j))
                if not options:
                    raise PartitionError(f"island {i}: fragment {sorted(frag)} has no neighbouring island")
                _, j = min(options)
                islands[i] -= frag
                islands[j] |= frag
                changed = True
            if changed:
                break
        if not changed:
            if any(not s for s in islands):
                raise PartitionError("connectivity repair emptied an island")
            return Partition(tuple(frozenset(s) for s in islands))
    raise PartitionError("connectivity repair did not settle")


def refine_cut(part: Partition, g: WeightedGraph, anchors: Sequence[Iterable[int]],
               units: Sequence[Iterable[int]] = ()) -> Partition:
    """Greedy boundary refinement of the cut weight.

    Repeatedly applies the move that lowers the cut the most, as long as
    neither island splits into more pieces and the source keeps a bus. A move
    transfers one unanchored bus, a whole must-link unit, or a whole connected
    piece of an island's unanchored buses to a neighbouring island.
    Ties go to the lowest bus id, then the lowest island index.
    """
    k = len(part)
    islands = [set(s) for s in part.islands]
    pinned = set().union(*[set(a) for a in anchors]) if anchors else set()
    unit_of = {n: (n,) for n in g.nodes}
    for u in units:
        u = tuple(sorted(u))
        for n in u:
            unit_of[n] = u
    movable = sorted({unit_of[n] for n in g.nodes if not set(unit_of[n]) & pinned})
    ncomp = [len(_induced_components(g, s)) for s in islands]
    while True:
        lab = {n: i for i, s in enumerate(islands) for n in s}
        chunks = []
        for s_ in islands:
            for comp in _induced_components(g, s_ - pinned):
                chunk = tuple(sorted(comp))
                if len(chunk) > 1 and all(set(unit_of[n]) <= comp for n in chunk):
                    chunks.append(chunk)
        moves = []
        for unit in movable + chunks:
            i = lab[unit[0]]
            if any(lab[n] != i for n in unit) or len(islands[i]) == len(unit):
                continue
            members = set(unit)
            links = [0.0] * k
            for a in unit:
                for b in g.neighbors(a):
                    if b not in members:
                        links[lab[b]] += g.weight(a, b)
            touching = {lab[b] for a in unit for b in g.neighbors(a) if b not in members} - {i}
            for j in sorted(touching):
                gain = links[i] - links[j]
                if gain < -1e-12 * max(1.0, links[i] + links[j]):
                    moves.append((gain, unit, j, i))
        for _, unit, j, i in sorted(moves):
            src, dst = islands[i] - set(unit), islands[j] | set(unit)
            ci, cj = len(_induced_components(g, src)), len(_induced_components(g, dst))
            if ci <= ncomp[i] and cj <= ncomp[j]:
                islands[i], islands[j] = src, dst
                ncomp[i], ncomp[j] = ci, cj
                break
        else:
            return Partition(tuple(frozenset(s) for s in islands))


@dataclass(frozen=True)
class CutEdge:
    a: int
    b: int
    branches: tuple[int, ...]
    weight: float


@dataclass(frozen=True)
class Cutset:
    edges: tuple[CutEdge, ...]
    total_disruption: float
    unit: str = "pu"
    kva_factor: float = 1.0
    imbalance: tuple | None = None

    @property
    def total_kva(self) -> float:
        return self.total_disruption * self.kva_factor

    def branch_ids(self) -> list[int]:
        return sorted(b for e in self.edges for b in e.branches)


def cutset(part: Partition, g: WeightedGraph, keep: Iterable[int] = (),
           injections: Mapping[int, complex] | None = None) -> Cutset:
    """Edges whose ends lie in different islands and their summed weight.

    With ``injections`` (net complex injection per bus, pu), the per-island
    P and Q imbalance is reported as well.
    """
    lab = part.label_of()
    missing = set(g.nodes) - set(lab)
    if missing:
        raise PartitionError(f"buses missing from the partition: {sorted(missing)[:5]}")
    keep = set(keep)
    edges = []
    for a, b in g.edges():
        if lab[a] != lab[b]:
            brs = tuple(g.branches.get((a, b), ()))
            hit = keep.intersection(brs)
            if hit:
                raise ConstraintViolation(f"kept branch {sorted(hit)[0]} ({a}-{b}) is in the cutset")
            edges.append(CutEdge(a, b, brs, g.weights[(a, b)]))
    total = 0.0
    for e in edges:
        total += e.weight
    imb = None
    if injections is not None:
        imb = tuple(complex(sum(injections[n] for n in sorted(s))) for s in part.islands)
    return Cutset(tuple(edges), total, g.unit, g.kva_factor, imb)


# ---------------------------------------------------------------------------
# pipeline

@dataclass(frozen=True)
class IslandingResult:
    partition: Partition
    cutset: Cutset
    constraints: ConstraintSet
    seeds: tuple[int, ...]
    embedding: Embedding
    raw_partition: Partition


def constrained_split(g: WeightedGraph, bus_groups: Sequence[Sequence[int]],
                      seeds: Sequence[int], cons: ConstraintSet,
                      injections: Mapping[int, complex] | None = None,
                      refine: bool = True) -> IslandingResult:
    """Spectral split of ``g`` into len(bus_groups) islands under ``cons``.

    ``seeds[c]`` is the bus that starts island c; island c is anchored on
    ``bus_groups[c]``.
    """
    k = len(bus_groups)
    cons.check_feasible(g.nodes)
    lap = normalized_laplacian(g.adjacency(), g.nodes, degree_floor=DEGREE_FLOOR)
    basis = projection_basis(cons, g.nodes)
    emb = constrained_embedding(lap, basis, k)
    seed_rows = [g.index(s) for s in seeds]
    cl_rows = [(g.index(a), g.index(b)) for a, b in sorted(cons.cl_pairs)]
    labels = kmedoids(emb.rows, k, seed_rows, cannot_link=cl_rows)
    raw = Partition(tuple(frozenset(n for n, c in zip(g.nodes, labels) if c == i) for i in range(k)))
    lab = raw.label_of()
    for a, b in sorted(cons.cl_pairs):
        if lab[a] == lab[b]:
            raise ConstraintViolation(f"cannot-link pair ({a}, {b}) landed in one island")
    if any(not s for s in raw.islands):
        raise PartitionError("clustering produced an empty island")
    classes = [c for c in cons.classes(g.nodes) if len(c) > 1]
    anchors = [set(grp) for grp in bus_groups]
    for c in classes:
        anchors[lab[c[0]]] |= set(c)
    part = enforce_connectivity(raw, g, anchors, classes)
    if refine:
        part = refine_cut(part, g, anchors, classes)
    lab = part.label_of()
    for a, b in sorted(cons.ml_pairs):
        if lab[a] != lab[b]:
            raise ConstraintViolation(f"must-link pair ({a}, {b}) split")
    for a, b in sorted(cons.cl_pairs):
        if lab[a] == lab[b]:
            raise ConstraintViolation(f"cannot-link pair ({a}, {b}) landed in one island")
    cut = cutset(part, g, cons.keep_edges, injections)
    return IslandingResult(part, cut, cons, tuple(seeds), emb, raw)


def island(smatrix: SMatrix, case: GridCase, groups, keep: Iterable[int] = (),
           injections: Mapping[int, complex] | None = None) -> IslandingResult:
    """Full islanding: graph, constraints, constrained embedding, k-medoids, repair, cutset.

    Island c holds coherent group c (in the order of ``groups``).
    """
    g = build_graph(smatrix, case)
    gmap = generator_bus_map(case)
    groups = [tuple(x) for x in groups]
    cons = build_constraints(groups, gmap, keep, case)
    bus_groups = [[gmap[label] for label in grp] for grp in groups]
    seeds = [gmap[representative(grp)] for grp in groups]
    return constrained_split(g, bus_groups, seeds, cons, injections)


# ---------------------------------------------------------------------------
# files

def partition_report(res: IslandingResult, groups=None) -> dict:
    part, cut = res.partition, res.cutset
    f = cut.kva_factor
    rep = {
        "islands": [sorted(int(n) for n in s) for s in part.islands],
        "cutset": [
            {"branch": e.branches[0] if e.branches else None, "branches": list(e.branches),
             "from": int(e.a), "to": int(e.b), "s_kva": round(e.weight * f, 6)}
            for e in cut.edges
        ],
        "total_disruption_kva": round(cut.total_kva, 6),
        "constraints": {
            "must_link": [list(p) for p in sorted(res.constraints.ml_pairs)],
            "cannot_link": [list(p) for p in sorted(res.constraints.cl_pairs)],
            "keep_branches": sorted(res.constraints.keep_edges),
            "seeds": list(res.seeds),
            "satisfied": True,
        },
    }
    if groups is not None:
        rep["groups"] = [list(g) for g in groups]
    if cut.imbalance is not None:
        rep["imbalance_mw_mvar"] = [[round(z.real * f / 1000, 6), round(z.imag * f / 1000, 6)]
                                    for z in cut.imbalance]
    return rep


def write_partition_json(res: IslandingResult, path, groups=None) -> None:
    with open(path, "w") as fh:
        json.dump(partition_report(res, groups), fh, indent=2, sort_keys=True)
        fh.write("\n")


PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"]


def write_islands_dot(res: IslandingResult, g: WeightedGraph, path) -> None:
    lab = res.partition.label_of()
    cut = {(e.a, e.b) for e in res.cutset.edges}
    lines = ["graph islands {", "  node [style=filled, fontcolor=white];"]
    for n in g.nodes:
        lines.append(f'  {n} [fillcolor="{PALETTE[lab[n] % len(PALETTE)]}", island={lab[n]}];')
    for a, b in g.edges():
        w = g.weights[(a, b)] * g.kva_factor
        style = "dashed" if (a, b) in cut else "solid"
        lines.append(f'  {a} -- {b} [style={style}, label="{w:.0f}"];')
    lines.append("}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
