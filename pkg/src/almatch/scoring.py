"""Node scoring: entropy-based uncertainty, spatial confidence, centrality.

Every pool node gets (a) the binary entropy of its match probability, (b) a
spatial confidence, the similarity-weighted share of its neighborhood that
agrees with its own prediction, (c) a combined uncertainty score mixing the
entropy of both, and (d) a PageRank centrality inside its prediction-side
component. Selection fuses the uncertainty and centrality rankings linearly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from almatch.pairgraph import ComponentSet, PairGraph


def conditional_entropy(p):
    """Binary entropy in bits; 0 log 0 taken as 0. Accepts scalars or arrays."""
    arr = np.asarray(p, dtype=np.float64)
    if np.any(arr < 0) or np.any(arr > 1):
        raise ValueError("probability outside [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = -arr * np.log2(arr) - (1 - arr) * np.log2(1 - arr)
    result = np.where((arr == 0) | (arr == 1), 0.0, terms)
    return float(result) if np.isscalar(p) or np.ndim(p) == 0 else result


def _confidence_in_own_side(graph: PairGraph, v: str) -> float:
    """Confidence that v's own side (prediction or label) is right."""
    kind = graph.kinds[v]
    if kind.is_labeled:
        return 1.0
    conf = graph.confidences[v]
    return conf if kind.side == 1 else 1.0 - conf


def spatial_confidence(graph: PairGraph, v: str) -> float:
    """Neighborhood agreement with v's prediction (weighted mean confidence).

    Numerator: similarity-weighted confidence mass of neighbors on v's
    predicted side; denominator: the same over all neighbors. Labeled
    neighbors count with confidence 1 on their label side. A node with no
    neighbors (or no positive-weight neighborhood mass) falls back to its own
    confidence. Negative similarity weights are clamped to zero so the score
    stays within [0, 1].
    """
    kind = graph.kinds[v]
    if kind.is_labeled:
        raise ValueError(f"spatial confidence is defined for pool nodes, {v!r} is labeled")
    side = kind.side
    numerator = 0.0
    denominator = 0.0
    for nbr, weight in graph.neighbors(v).items():
        w = max(weight, 0.0)
        mass = w * _confidence_in_own_side(graph, nbr)
        denominator += mass
        if graph.kinds[nbr].side == side:
            numerator += mass
    if denominator <= 0.0:
        return _confidence_in_own_side(graph, v)
    return numerator / denominator


def spatial_confidences(graph: PairGraph) -> tuple[dict[str, float], list[str]]:
    """Spatial confidence for every pool node; also reports fallback nodes."""
    values: dict[str, float] = {}
    fallbacks: list[str] = []
    for v in graph.node_ids:
        if graph.kinds[v].is_labeled:
            continue
        if not graph.neighbors(v):
            fallbacks.append(v)
        values[v] = spatial_confidence(graph, v)
    return values, fallbacks


def uncertainty_score(confidence: float, spatial: float, beta: float) -> float:
    """Mix of local and spatial entropy: beta*H(conf) + (1-beta)*H(spatial)."""
    if not 0 <= beta <= 1:
        raise ValueError("beta must be within [0, 1]")
    return beta * conditional_entropy(confidence) + (1 - beta) * conditional_entropy(spatial)


def pagerank(
    graph: PairGraph,
    component: list[str],
    rho: float = 0.85,
    tol: float = 1e-8,
    max_iter: int = 100,
    clamp_counter: dict | None = None,
) -> dict[str, float]:
    """Weighted PageRank over one component (undirected edges as arc pairs).

    Power iteration with out-weight normalization and uniform teleport
    (1-rho)/|component|; scores sum to 1. Non-positive edge weights are
    clamped to a tiny positive value to keep the transition stochastic; a
    singleton component scores 1.0.
    """
    if not component:
        raise ValueError("empty component")
    if not 0 < rho < 1:
        raise ValueError("rho must be in (0, 1)")
    n = len(component)
    if n == 1:
        return {component[0]: 1.0}
    index = {v: i for i, v in enumerate(component)}
    W = np.zeros((n, n))
    clamped = 0
    for i, v in enumerate(component):
        for nbr, weight in graph.neighbors(v).items():
            j = index.get(nbr)
            if j is None:
                continue
            w = weight
            if w <= 0:
                clamped += 1
                w = max(w, 0.0) + 1e-12
            W[i, j] = w
    if clamp_counter is not None and clamped:
        clamp_counter["clamped_edges"] = clamp_counter.get("clamped_edges", 0) + clamped // 2

    out = W.sum(axis=1)
    scores = np.full(n, 1.0 / n)
    teleport = (1.0 - rho) / n
    for _ in range(max_iter):
        nxt = rho * ((scores / out) @ W) + teleport
        if np.abs(nxt - scores).sum() < tol:
            scores = nxt
            break
        scores = nxt
    return {v: float(scores[i]) for v, i in index.items()}


@dataclass
class NodeScores:
    """All per-node selection inputs for one pool pair."""

    pair_id: str
    prediction: int
    confidence: float
    entropy_local: float
    spatial_confidence: float
    uncertainty: float
    centrality: float = 0.0
    rank_unc: int = 0
    rank_cen: int = 0
    fused_rank: float = 0.0
    component_id: int = -1


def rank_by(values: dict[str, float], descending: bool = True) -> dict[str, int]:
    """Dense 1..m ranking; ties broken by the smaller pair id."""
    ordered = sorted(values, key=lambda pid: (-values[pid] if descending else values[pid], pid))
    return {pid: rank for rank, pid in enumerate(ordered, start=1)}


def fused_rank(candidates: list[NodeScores], alpha: float) -> list[NodeScores]:
    """Fuse uncertainty and centrality rankings within one component.

    fused = alpha * rank_unc + (1 - alpha) * rank_cen, both ranks starting at
    1 for the highest score. Returns the candidates sorted ascending by the
    fused value, ties by pair id; rank fields are filled in place.
    """
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must be within [0, 1]")
    unc = rank_by({s.pair_id: s.uncertainty for s in candidates})
    cen = rank_by({s.pair_id: s.centrality for s in candidates})
    for s in candidates:
        s.rank_unc = unc[s.pair_id]
        s.rank_cen = cen[s.pair_id]
        s.fused_rank = alpha * s.rank_unc + (1 - alpha) * s.rank_cen
    return sorted(candidates, key=lambda s: (s.fused_rank, s.pair_id))


def score_nodes(
    g_het: PairGraph,
    side_components: dict[int, ComponentSet],
    side_graphs: dict[int, PairGraph],
    beta: float,
    rho: float = 0.85,
    clamp_counter: dict | None = None,
) -> dict[str, NodeScores]:
    """Score every pool node: entropy, spatial confidence, centrality.

    ``side_graphs``/``side_components`` map prediction side (1 or 0) to that
    side's graph and components. Centrality and the component id come from
    the node's own side; spatial confidence from the heterogeneous graph.
    """
    spatial, _ = spatial_confidences(g_het)
    scores: dict[str, NodeScores] = {}
    for v, kind in g_het.kinds.items():
        if kind.is_labeled:
            continue
        conf = g_het.confidences[v]
        scores[v] = NodeScores(
            pair_id=v,
            prediction=kind.side,
            confidence=conf,
            entropy_local=conditional_entropy(conf),
            spatial_confidence=spatial[v],
            uncertainty=uncertainty_score(conf, spatial[v], beta),
        )
    for side in (0, 1):
        graph = side_graphs.get(side)
        comps = side_components.get(side)
        if graph is None or comps is None:
            continue
        for comp_id, comp in enumerate(comps.components):
            pr = pagerank(graph, comp, rho=rho, clamp_counter=clamp_counter)
            for v, score in pr.items():
                if v in scores:
                    scores[v].centrality = score
                    scores[v].component_id = comp_id
    return scores


def dump_scores_csv(scores: dict[str, NodeScores], path: str | Path) -> None:
    """Debug dump of every scored node, one row per pair."""
    fields = [
        "pair_id", "prediction", "confidence", "spatial_confidence",
        "uncertainty", "centrality", "rank_unc", "rank_cen", "fused_rank",
        "component_id",
    ]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for pid in sorted(scores):
            s = scores[pid]
            writer.writerow([
                s.pair_id, s.prediction, f"{s.confidence:.9g}",
                f"{s.spatial_confidence:.9g}", f"{s.uncertainty:.9g}",
                f"{s.centrality:.9g}", s.rank_unc, s.rank_cen,
                f"{s.fused_rank:.9g}", s.component_id,
            ])
