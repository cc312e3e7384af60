"""Document similarity from attribute matchings, clustering and energy layout."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .matching import Correspondence


def max_weight_matching(weights) -> tuple[list[tuple[int, int]], float]:
    """Maximum-weight bipartite matching on a non-negative p×q matrix.

    Solved as an assignment problem (Hungarian method with potentials) on
    the smaller side; zero-weight pairs are dropped from the result. Returns
    ``(pairs, total)`` with pairs sorted by row.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2:
        raise ValueError("weights must be a 2-D matrix")
    if (w < 0).any():
        raise ValueError("weights must be non-negative")
    p, q = w.shape
    if p == 0 or q == 0 or not w.any():
        return [], 0.0
    transposed = p > q
    if transposed:
        w = w.T
        p, q = q, p
    cost = w.max() - w

    # 1-based arrays; column 0 is a virtual source.
    u = [0.0] * (p + 1)
    v = [0.0] * (q + 1)
    match_col = [0] * (q + 1)
    way = [0] * (q + 1)
    for row in range(1, p + 1):
        match_col[0] = row
        j0 = 0
        minv = [math.inf] * (q + 1)
        used = [False] * (q + 1)
        while True:
            used[j0] = True
            i0 = match_col[j0]
            delta, j1 = math.inf, 0
            for j in range(1, q + 1):
                if used[j]:
                    continue
                reduced = cost[i0 - 1, j - 1] - u[i0] - v[j]
                if reduced < minv[j]:
                    minv[j] = reduced
                    way[j] = j0
                if minv[j] < delta:
                    delta, j1 = minv[j], j
            for j in range(q + 1):
                if used[j]:
                    u[match_col[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match_col[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match_col[j0] = match_col[j1]
            j0 = j1

    pairs = []
    for j in range(1, q + 1):
        i = match_col[j]
        if i and w[i - 1, j - 1] > 0:
            pairs.append((j - 1, i - 1) if transposed else (i - 1, j - 1))
    pairs.sort()
    original = np.asarray(weights, dtype=float)
    total = math.fsum(sorted(original[a, b] for a, b in pairs))
    return pairs, total


def doc_similarity(corrs: Sequence[Correspondence], attrs_a: Sequence, attrs_b: Sequence) -> float:
    """Matched confidence between two documents over the smaller attribute count.

    Only attribute-to-attribute correspondences linking ``attrs_a`` to
    ``attrs_b`` (in either direction) contribute.
    """
    if not attrs_a or not attrs_b:
        raise ValueError("documents must have at least one attribute")
    index_a = {a: k for k, a in enumerate(attrs_a)}
    index_b = {b: k for k, b in enumerate(attrs_b)}
    w = np.zeros((len(attrs_a), len(attrs_b)))
    for c in corrs:
        if c.is_concept:
            continue
        if c.left in index_a and c.right in index_b:
            a, b = index_a[c.left], index_b[c.right]
        elif c.right in index_a and c.left in index_b:
            a, b = index_a[c.right], index_b[c.left]
        else:
            continue
        w[a, b] = max(w[a, b], c.confidence)
    _, total = max_weight_matching(w)
    return min(1.0, total / min(len(attrs_a), len(attrs_b)))


@dataclass(frozen=True)
class SimilarityMatrix:
    docs: tuple[str, ...]
    sim: np.ndarray = field(compare=False)

    def __post_init__(self):
        s = self.sim
        if s.shape != (len(self.docs), len(self.docs)):
            raise ValueError("similarity matrix shape does not match the document list")
        if not np.array_equal(s, s.T):
            raise ValueError("similarity matrix must be symmetric")
        if len(self.docs) and not (np.all(np.diag(s) == 1.0) and s.min() >= 0 and s.max() <= 1):
            raise ValueError("similarities must lie in [0, 1] with a unit diagonal")

    def index(self, doc: str) -> int:
        try:
            return self.docs.index(doc)
        except ValueError:
            raise KeyError(f"unknown document {doc!r}") from None

    def __getitem__(self, pair: tuple[str, str]) -> float:
        return float(self.sim[self.index(pair[0]), self.index(pair[1])])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["doc", *self.docs])
        for doc, row in zip(self.docs, self.sim):
            writer.writerow([doc, *(f"{x:.6f}" for x in row)])
        return buf.getvalue()


def similarity_matrix(docs: Sequence[str], pair_scores: dict[tuple[str, str], float]) -> SimilarityMatrix:
    """Assemble a matrix from scores keyed by unordered doc pairs."""
    n = len(docs)
    sim = np.eye(n)
    for a in range(n):
        for b in range(a + 1, n):
            key = (docs[a], docs[b]) if (docs[a], docs[b]) in pair_scores else (docs[b], docs[a])
            sim[a, b] = sim[b, a] = pair_scores.get(key, 0.0)
    return SimilarityMatrix(tuple(docs), sim)


@dataclass(frozen=True)
class ClusterAssignment:
    cluster: dict
    representativeness: dict

    def members(self, cluster_id: int) -> list[str]:
        return sorted(d for d, c in self.cluster.items() if c == cluster_id)

    @property
    def cluster_ids(self) -> list[int]:
        return sorted(set(self.cluster.values()))

    def to_json(self) -> dict:
        return {
            "clusters": [{"id": c, "docs": self.members(c)} for c in self.cluster_ids],
            "docs": [{"id": d, "cluster": self.cluster[d],
                      "representativeness": round(self.representativeness[d], 6)}
                     for d in sorted(self.cluster)],
        }


def build_clusters(S: SimilarityMatrix, epsilon: float = 0.0) -> ClusterAssignment:
    """Connected components of the ``sim > epsilon`` graph.

    Cluster ids are 1..k ordered by each cluster's smallest doc id, so they do
    not depend on the order of ``S.docs``. Representativeness is the mean
    similarity to the other members (1 for singletons).
    """
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    n = len(S.docs)
    component = [-1] * n
    for start in range(n):
        if component[start] >= 0:
            continue
        component[start] = start
        stack = [start]
        while stack:
            a = stack.pop()
            for b in range(n):
                if component[b] < 0 and b != a and S.sim[a, b] > epsilon:
                    component[b] = start
                    stack.append(b)
    groups: dict[int, list[int]] = {}
    for k, c in enumerate(component):
        groups.setdefault(c, []).append(k)
    ordered = sorted(groups.values(), key=lambda g: min(S.docs[k] for k in g))
    cluster, rep = {}, {}
    for cid, group in enumerate(ordered, start=1):
        for k in group:
            cluster[S.docs[k]] = cid
            peers = [S.sim[k, o] for o in group if o != k]
            rep[S.docs[k]] = math.fsum(sorted(peers)) / len(peers) if peers else 1.0
    return ClusterAssignment(cluster, rep)


def recommend(S: SimilarityMatrix, doc: str, k: int, include_zero: bool = False) -> list[str]:
    row = S.index(doc)
    candidates = [(-float(S.sim[row, o]), S.docs[o]) for o in range(len(S.docs)) if o != row]
    if not include_zero:
        candidates = [c for c in candidates if c[0] < 0]
    return [d for _, d in sorted(candidates)[:max(k, 0)]]


@dataclass(frozen=True)
class LayoutParams:
    iterations: int = 500
    step: float = 0.05
    seed: int = 0


@dataclass(frozen=True)
class LayoutCoordinates:
    docs: tuple[str, ...]
    positions: np.ndarray = field(compare=False)
    radii: np.ndarray = field(compare=False)
    energies: tuple[float, ...] = ()

    def to_json(self, assignment: ClusterAssignment | None = None) -> dict:
        out = []
        for k, doc in enumerate(self.docs):
            entry = {"id": doc, "x": round(float(self.positions[k, 0]), 6),
                     "y": round(float(self.positions[k, 1]), 6), "r": round(float(self.radii[k]), 6)}
            if assignment is not None:
                entry["cluster"] = assignment.cluster[doc]
            out.append(entry)
        return {"docs": out}


RADIUS_SCALE = 0.4
_COINCIDENT = 1e-9
_NUDGE = 1e-6


def layout_energy(sim: np.ndarray, positions: np.ndarray) -> float:
    """Sum over pairs of sim·distance − ln(distance)."""
    n = len(positions)
    if n < 2:
        return 0.0
    iu = np.triu_indices(n, 1)
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))[iu]
    return float(np.sum(sim[iu] * dist - np.log(dist)))


def _energy_gradient(sim: np.ndarray, positions: np.ndarray) -> np.ndarray:
    diff = positions[:, None, :] - positions[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    np.fill_diagonal(dist, 1.0)
    coef = (sim - 1.0 / dist) / dist
    np.fill_diagonal(coef, 0.0)
    return (coef[:, :, None] * diff).sum(axis=1)


def _separate_coincident(positions: np.ndarray) -> np.ndarray:
    n = len(positions)
    for a in range(n):
        for b in range(a + 1, n):
            if np.hypot(*(positions[a] - positions[b])) < _COINCIDENT:
                positions[b] = positions[b] + np.array([_NUDGE * (b + 1), _NUDGE])
    return positions


def layout(S: SimilarityMatrix, params: LayoutParams | None = None,
           assignment: ClusterAssignment | None = None) -> LayoutCoordinates:
    """Minimize the attraction/repulsion energy by descent with step halving.

    A move is accepted only if it does not raise the energy; otherwise the
    step is halved and the move discarded. ``energies`` records the energy
    after every accepted move (first entry: the seeded start).
    """
    params = params or LayoutParams()
    if params.iterations < 1:
        raise ValueError("iterations must be >= 1")
    n = len(S.docs)
    rng = np.random.default_rng(params.seed)
    positions = _separate_coincident(rng.uniform(-1.0, 1.0, size=(n, 2)))
    sim = np.asarray(S.sim, dtype=float)
    energy = layout_energy(sim, positions)
    energies = [energy]
    step = params.step
    if n >= 2:
        for _ in range(params.iterations):
            candidate = _separate_coincident(positions - step * _energy_gradient(sim, positions))
            cand_energy = layout_energy(sim, candidate)
            if cand_energy <= energy:
                positions, energy = candidate, cand_energy
                energies.append(energy)
            else:
                step /= 2
    if n:
        positions = positions - positions.mean(axis=0)
    if assignment is not None:
        radii = np.array([RADIUS_SCALE * assignment.representativeness[d] for d in S.docs])
    else:
        radii = np.full(n, RADIUS_SCALE)
    return LayoutCoordinates(S.docs, positions, radii, tuple(energies))
