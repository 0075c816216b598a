"""Similarity graphs over pair representations.

Nodes are candidate pairs (pool nodes carry the matcher's prediction, labeled
nodes their label side); edges connect nearby representations inside one
cluster, weighted by cosine similarity. Per iteration three graphs exist: one
over pool pairs predicted match, one over pool pairs predicted non-match, and
a heterogeneous graph over the full dataset where labeled pairs participate
as anchors but are never connected to each other.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from almatch.clustering import ClusterBounds, Clustering, KSelection, select_k
from almatch.matcher import PairEncoding


class NodeKind(Enum):
    POOL_MATCH = "pool_match"
    POOL_NONMATCH = "pool_nonmatch"
    LABELED_MATCH = "labeled_match"
    LABELED_NONMATCH = "labeled_nonmatch"

    @property
    def is_labeled(self) -> bool:
        return self in (NodeKind.LABELED_MATCH, NodeKind.LABELED_NONMATCH)

    @property
    def side(self) -> int:
        """1 for the match side, 0 for the non-match side."""
        return 1 if self in (NodeKind.POOL_MATCH, NodeKind.LABELED_MATCH) else 0


def cosine_similarity(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
        raise ValueError("cosine similarity needs finite vectors")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return float(np.dot(u, v) / (nu * nv))


@dataclass
class PairGraph:
    """Weighted undirected graph over pair encodings.

    ``edges`` maps unordered id pairs (stored with the lexically smaller id
    first) to cosine weights; ``nn_edges`` and ``extra_edges`` record which
    construction stage created each edge. ``cluster_of`` retains the cluster
    partition the edges were confined to.
    """

    node_ids: list[str]
    kinds: dict[str, NodeKind]
    confidences: dict[str, float]
    vectors: dict[str, np.ndarray]
    edges: dict[tuple[str, str], float] = field(default_factory=dict)
    nn_edges: set[tuple[str, str]] = field(default_factory=set)
    extra_edges: set[tuple[str, str]] = field(default_factory=set)
    cluster_of: dict[str, int] = field(default_factory=dict)
    adjacency: dict[str, dict[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.adjacency:
            self.adjacency = {v: {} for v in self.node_ids}
            for (u, v), w in self.edges.items():
                self.adjacency[u][v] = w
                self.adjacency[v][u] = w

    @property
    def n_nodes(self) -> int:
        return len(self.node_ids)

    def neighbors(self, v: str) -> dict[str, float]:
        return self.adjacency[v]

    def degree(self, v: str) -> int:
        return len(self.adjacency[v])


@dataclass
class ComponentSet:
    """Connected components, ordered by their smallest contained pair id."""

    components: list[list[str]]
    index_of: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index_of:
            self.index_of = {
                v: i for i, comp in enumerate(self.components) for v in comp
            }

    def __len__(self) -> int:
        return len(self.components)

    def component_of(self, v: str) -> list[str]:
        return self.components[self.index_of[v]]


def _edge_key(u: str, v: str) -> tuple[str, str]:
    return (u, v) if u < v else (v, u)


def _cluster_edges(
    member_ids: list[str],
    sims: np.ndarray,
    labeled: np.ndarray,
    q: int,
    extra_ratio: float,
) -> tuple[set[tuple[str, str]], set[tuple[str, str]], dict[tuple[str, str], float]]:
    """Edge set for one cluster: q-NN picks, then ratio-based extra edges.

    ``sims`` is the cluster members' pairwise similarity matrix (the caller
    computes cosines from vectors; any symmetric similarity works). Unlabeled
    nodes rank every other member; labeled nodes rank unlabeled members only,
    so no edge ever joins two labeled nodes. Mirrored picks collapse into one
    undirected edge. Extra edges take the highest remaining similarities,
    skipping labeled-labeled pairs without consuming quota.
    """
    m = len(member_ids)
    weights: dict[tuple[str, str], float] = {}
    nn: set[tuple[str, str]] = set()
    if m < 2:
        return nn, set(), weights

    order = sorted(range(m), key=lambda i: member_ids[i])
    for i in order:
        candidates = [
            j for j in range(m) if j != i and not (labeled[i] and labeled[j])
        ]
        candidates.sort(key=lambda j: (-sims[i, j], member_ids[j]))
        for j in candidates[:q]:
            key = _edge_key(member_ids[i], member_ids[j])
            nn.add(key)
            weights[key] = float(sims[i, j])

    all_pairs = {
        _edge_key(member_ids[i], member_ids[j])
        for i in range(m)
        for j in range(i + 1, m)
    }
    remaining = all_pairs - nn
    budget = math.floor(extra_ratio * len(remaining))
    extra: set[tuple[str, str]] = set()
    if budget > 0 and remaining:
        pos = {pid: i for i, pid in enumerate(member_ids)}
        ranked = sorted(remaining, key=lambda e: (-sims[pos[e[0]], pos[e[1]]], e))
        for u, v in ranked:
            if len(extra) == budget:
                break
            if labeled[pos[u]] and labeled[pos[v]]:
                continue
            extra.add((u, v))
            weights[(u, v)] = float(sims[pos[u], pos[v]])
    return nn, extra, weights


def build_graph(
    encodings: list[PairEncoding],
    node_kinds: dict[str, NodeKind],
    q: int = 15,
    extra_ratio: float = 0.03,
    bounds: ClusterBounds = ClusterBounds(),
    seed: int = 0,
) -> PairGraph:
    """Cluster the encodings and wire per-cluster q-NN plus extra edges.

    The cluster count comes from select_k over the bounds-implied candidate
    range; when no candidate count is feasible (tiny node sets), everything
    becomes one cluster. Clusters smaller than q+1 simply connect completely.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    if not 0 <= extra_ratio <= 1:
        raise ValueError("extra_ratio must be within [0, 1]")
    ids = [e.pair_id for e in encodings]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate pair_id among encodings")
    if not encodings:
        return PairGraph([], {}, {}, {})

    vectors = np.stack([np.asarray(e.representation, dtype=np.float64) for e in encodings])
    if np.any(np.linalg.norm(vectors, axis=1) == 0):
        bad = ids[int(np.flatnonzero(np.linalg.norm(vectors, axis=1) == 0)[0])]
        raise ValueError(f"zero representation vector for pair {bad!r}")
    kinds = {pid: node_kinds[pid] for pid in ids}
    confidences = {e.pair_id: e.confidence for e in encodings}

    if len(encodings) < 2:
        graph = PairGraph(ids, kinds, confidences, {ids[0]: vectors[0]} if ids else {})
        graph.cluster_of = {pid: 0 for pid in ids}
        return graph

    try:
        selection = select_k(vectors, bounds, seed=seed, details=True)
        assignment = selection.clustering.assignment
    except ValueError:
        assignment = np.zeros(len(ids), dtype=np.int64)  # single-cluster fallback

    labeled_flags = np.array([kinds[pid].is_labeled for pid in ids])
    edges: dict[tuple[str, str], float] = {}
    nn_edges: set[tuple[str, str]] = set()
    extra_edges: set[tuple[str, str]] = set()
    unit = vectors / np.linalg.norm(vectors, axis=1)[:, None]
    for c in range(int(assignment.max()) + 1):
        rows = np.flatnonzero(assignment == c)
        member_ids = [ids[i] for i in rows]
        sims = unit[rows] @ unit[rows].T
        nn, extra, weights = _cluster_edges(
            member_ids, sims, labeled_flags[rows], q, extra_ratio
        )
        nn_edges |= nn
        extra_edges |= extra
        edges.update(weights)

    graph = PairGraph(
        node_ids=sorted(ids),
        kinds=kinds,
        confidences=confidences,
        vectors={pid: vectors[i] for i, pid in enumerate(ids)},
        edges=dict(sorted(edges.items())),
        nn_edges=nn_edges,
        extra_edges=extra_edges,
        cluster_of={pid: int(assignment[i]) for i, pid in enumerate(ids)},
    )
    return graph


def connected_components(graph: PairGraph) -> ComponentSet:
    """Undirected components via traversal, ordered by smallest pair id."""
    seen: set[str] = set()
    components: list[list[str]] = []
    for start in sorted(graph.node_ids):
        if start in seen:
            continue
        queue = deque([start])
        seen.add(start)
        comp = []
        while queue:
            v = queue.popleft()
            comp.append(v)
            for nbr in graph.adjacency[v]:
                if nbr not in seen:
                    seen.add(nbr)
                    queue.append(nbr)
        components.append(sorted(comp))
    components.sort(key=lambda comp: comp[0])
    return ComponentSet(components)


def build_iteration_graphs(
    pool_encodings: list[PairEncoding],
    labeled_encodings: list[PairEncoding],
    labels: dict[str, int],
    q: int = 15,
    extra_ratio: float = 0.03,
    bounds: ClusterBounds = ClusterBounds(),
    seed: int = 0,
) -> tuple[PairGraph, PairGraph, PairGraph]:
    """Build the three per-iteration graphs (match, non-match, heterogeneous).

    The first two cover pool pairs by predicted side; the heterogeneous graph
    covers pool plus labeled pairs, with labeled nodes tagged by their label.
    Each graph is clustered and wired independently.
    """
    pool_kinds = {
        e.pair_id: NodeKind.POOL_MATCH if e.prediction == 1 else NodeKind.POOL_NONMATCH
        for e in pool_encodings
    }
    plus = [e for e in pool_encodings if e.prediction == 1]
    minus = [e for e in pool_encodings if e.prediction == 0]
    g_plus = build_graph(plus, pool_kinds, q, extra_ratio, bounds, seed)
    g_minus = build_graph(minus, pool_kinds, q, extra_ratio, bounds, seed)

    het_kinds = dict(pool_kinds)
    for enc in labeled_encodings:
        label = labels[enc.pair_id]
        het_kinds[enc.pair_id] = NodeKind.LABELED_MATCH if label == 1 else NodeKind.LABELED_NONMATCH
    g_het = build_graph(pool_encodings + labeled_encodings, het_kinds, q, extra_ratio, bounds, seed)
    return g_plus, g_minus, g_het


def dump_edges_csv(graph: PairGraph, path: str | Path) -> None:
    """Debug dump: one (u, v, weight) row per edge."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["u", "v", "weight"])
        for (u, v), w in graph.edges.items():
            writer.writerow([u, v, f"{w:.12g}"])
