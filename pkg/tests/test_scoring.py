"""Uncertainty, spatial confidence, PageRank, and rank fusion."""

import numpy as np
import pytest

from almatch.clustering import ClusterBounds
from almatch.pairgraph import (
    NodeKind,
    PairGraph,
    build_iteration_graphs,
    connected_components,
)
from almatch.scoring import (
    NodeScores,
    conditional_entropy,
    fused_rank,
    pagerank,
    rank_by,
    score_nodes,
    spatial_confidence,
    spatial_confidences,
    uncertainty_score,
)
from tests import worked_case
from tests.test_pairgraph import random_encodings


class TestConditionalEntropy:
    def test_grid_properties(self):
        grid = np.linspace(0.0, 1.0, 1000)
        H = conditional_entropy(grid)
        assert np.allclose(H, conditional_entropy(1.0 - grid), atol=1e-12)
        assert H.max() == pytest.approx(1.0, abs=1e-6)
        assert conditional_entropy(0.5) == pytest.approx(1.0)
        assert conditional_entropy(0.0) == 0.0 and conditional_entropy(1.0) == 0.0
        interior = (grid > 0) & (grid < 1)
        assert np.all(H[interior] > 0)
        # increasing toward 0.5 from both ends
        left = H[grid <= 0.5]
        assert np.all(np.diff(left) >= -1e-12)

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError, match="outside"):
            conditional_entropy(1.5)
        with pytest.raises(ValueError, match="outside"):
            conditional_entropy(np.array([0.2, -0.1]))


def two_node_graph(weight, kinds=None, confidences=None):
    kinds = kinds or {"a": NodeKind.POOL_MATCH, "b": NodeKind.POOL_NONMATCH}
    confidences = confidences or {"a": 0.8, "b": 0.3}
    return PairGraph(
        node_ids=["a", "b"],
        kinds=kinds,
        confidences=confidences,
        vectors={"a": np.ones(2), "b": np.ones(2)},
        edges={("a", "b"): weight},
    )


class TestSpatialConfidence:
    def test_worked_case_value(self):
        graph = worked_case.build_graph()
        assert spatial_confidence(graph, "s1") == pytest.approx(worked_case.SPATIAL_S1, abs=5e-3)
        assert spatial_confidence(graph, "s1") == pytest.approx(worked_case.SPATIAL_S1, abs=1e-12)

    def test_isolated_node_falls_back_to_own_confidence(self):
        graph = PairGraph(
            node_ids=["a"],
            kinds={"a": NodeKind.POOL_NONMATCH},
            confidences={"a": 0.1},
            vectors={"a": np.ones(2)},
        )
        # non-match side: own-side confidence is 1 - 0.1
        assert spatial_confidence(graph, "a") == pytest.approx(0.9)
        values, fallbacks = spatial_confidences(graph)
        assert fallbacks == ["a"] and values["a"] == pytest.approx(0.9)

    def test_negative_weights_clamped(self):
        graph = two_node_graph(-0.7)
        # the only neighbor has non-positive weight: falls back
        assert spatial_confidence(graph, "a") == pytest.approx(0.8)

    def test_agreeing_neighbors_raise_score(self):
        kinds = {"a": NodeKind.POOL_MATCH, "b": NodeKind.POOL_MATCH}
        graph = two_node_graph(0.9, kinds=kinds, confidences={"a": 0.8, "b": 0.7})
        assert spatial_confidence(graph, "a") == pytest.approx(1.0)

    def test_labeled_node_rejected(self):
        graph = worked_case.build_graph()
        with pytest.raises(ValueError, match="pool nodes"):
            spatial_confidence(graph, "s7")

    def test_bounded_by_unit_interval(self):
        graph = worked_case.build_graph()
        values, _ = spatial_confidences(graph)
        assert all(0.0 <= v <= 1.0 for v in values.values())
        assert set(values) == {"s1", "s2", "s3", "s4", "s5", "s6"}


class TestUncertaintyScore:
    def test_beta_reductions(self):
        for conf, spatial in [(0.9, 0.4), (0.2, 0.8), (0.55, 0.5)]:
            assert uncertainty_score(conf, spatial, 1.0) == pytest.approx(conditional_entropy(conf))
            assert uncertainty_score(conf, spatial, 0.0) == pytest.approx(conditional_entropy(spatial))
            mid = uncertainty_score(conf, spatial, 0.5)
            assert mid == pytest.approx(
                0.5 * conditional_entropy(conf) + 0.5 * conditional_entropy(spatial)
            )

    def test_beta_validated(self):
        with pytest.raises(ValueError, match="beta"):
            uncertainty_score(0.5, 0.5, 1.2)


def solve_pagerank_exact(graph, component, rho):
    """Oracle: the stationary scores as the solution of the linear system."""
    n = len(component)
    index = {v: i for i, v in enumerate(component)}
    W = np.zeros((n, n))
    for i, v in enumerate(component):
        for nbr, w in graph.neighbors(v).items():
            j = index.get(nbr)
            if j is None:
                continue
            W[i, j] = w if w > 0 else 1e-12
    P = W / W.sum(axis=1, keepdims=True)
    s = np.linalg.solve(np.eye(n) - rho * P.T, np.full(n, (1.0 - rho) / n))
    return {v: float(s[index[v]]) for v in component}


def random_connected_graph(n, seed, negative_frac=0.0):
    """Random connected PairGraph: spanning tree plus extra edges."""
    rng = np.random.default_rng(seed)
    ids = [f"v{i:02d}" for i in range(n)]
    edges = {}
    for i in range(1, n):
        j = int(rng.integers(i))
        w = float(rng.uniform(0.05, 1.0))
        edges[(ids[j], ids[i])] = w
    for _ in range(n):
        i, j = rng.choice(n, size=2, replace=False)
        key = (ids[min(i, j)], ids[max(i, j)])
        if key not in edges:
            edges[key] = float(rng.uniform(0.05, 1.0))
    if negative_frac:
        for key in list(edges)[: max(1, int(negative_frac * len(edges)))]:
            edges[key] = -abs(edges[key])
    return PairGraph(
        node_ids=ids,
        kinds={i: NodeKind.POOL_MATCH for i in ids},
        confidences={i: 0.6 for i in ids},
        vectors={i: np.ones(2) for i in ids},
        edges=edges,
    )


class TestPageRank:
    def test_sums_to_one_and_matches_exact_solver(self):
        for seed in range(50):
            rng = np.random.default_rng(seed + 1000)
            n = int(rng.integers(2, 21))
            graph = random_connected_graph(n, seed)
            comp = connected_components(graph).components[0]
            scores = pagerank(graph, comp, rho=0.85)
            assert sum(scores.values()) == pytest.approx(1.0, abs=1e-6)
            exact = solve_pagerank_exact(graph, comp, rho=0.85)
            for v in comp:
                assert scores[v] == pytest.approx(exact[v], abs=1e-6)

    def test_two_node_symmetry(self):
        graph = two_node_graph(0.42)
        scores = pagerank(graph, ["a", "b"])
        assert scores["a"] == pytest.approx(0.5, abs=1e-9)
        assert scores["b"] == pytest.approx(0.5, abs=1e-9)

    def test_matches_networkx(self):
        import networkx as nx

        graph = random_connected_graph(15, seed=7)
        comp = connected_components(graph).components[0]
        ours = pagerank(graph, comp, rho=0.85)
        G = nx.Graph()
        G.add_nodes_from(comp)
        for (u, v), w in graph.edges.items():
            G.add_edge(u, v, weight=w)
        theirs = nx.pagerank(G, alpha=0.85, weight="weight", tol=1e-12, max_iter=500)
        for v in comp:
            assert ours[v] == pytest.approx(theirs[v], abs=1e-6)

    def test_singleton_component(self):
        graph = random_connected_graph(3, seed=1)
        assert pagerank(graph, ["v00"]) == {"v00": 1.0}

    def test_hub_outranks_leaves(self):
        ids = ["hub", "l1", "l2", "l3"]
        graph = PairGraph(
            node_ids=ids,
            kinds={i: NodeKind.POOL_MATCH for i in ids},
            confidences={i: 0.6 for i in ids},
            vectors={i: np.ones(2) for i in ids},
            edges={("hub", "l1"): 0.9, ("hub", "l2"): 0.9, ("hub", "l3"): 0.9},
        )
        scores = pagerank(graph, sorted(ids))
        assert scores["hub"] > max(scores["l1"], scores["l2"], scores["l3"])

    def test_negative_weights_clamped_and_counted(self):
        graph = random_connected_graph(8, seed=2, negative_frac=0.3)
        comp = connected_components(graph).components[0]
        counter = {}
        scores = pagerank(graph, comp, clamp_counter=counter)
        assert sum(scores.values()) == pytest.approx(1.0, abs=1e-6)
        assert counter.get("clamped_edges", 0) > 0

    def test_validation(self):
        graph = two_node_graph(0.5)
        with pytest.raises(ValueError, match="empty component"):
            pagerank(graph, [])
        with pytest.raises(ValueError, match="rho"):
            pagerank(graph, ["a", "b"], rho=1.0)


class TestRankFusion:
    def make_scores(self, unc, cen):
        return [
            NodeScores(
                pair_id=pid,
                prediction=1,
                confidence=0.6,
                entropy_local=0.0,
                spatial_confidence=0.5,
                uncertainty=u,
                centrality=c,
            )
            for pid, u, c in zip(sorted(unc), unc.values(), cen.values())
        ]

    def test_rank_by_dense_with_id_ties(self):
        ranks = rank_by({"b": 1.0, "a": 1.0, "c": 0.2})
        assert ranks == {"a": 1, "b": 2, "c": 3}
        ranks_asc = rank_by({"b": 1.0, "a": 1.0, "c": 0.2}, descending=False)
        assert ranks_asc == {"c": 1, "a": 2, "b": 3}

    def test_alpha_reductions(self):
        unc = {"a": 0.9, "b": 0.5, "c": 0.1}
        cen = {"a": 0.1, "b": 0.5, "c": 0.9}
        by_unc = [s.pair_id for s in fused_rank(self.make_scores(unc, cen), alpha=1.0)]
        assert by_unc == ["a", "b", "c"]
        by_cen = [s.pair_id for s in fused_rank(self.make_scores(unc, cen), alpha=0.0)]
        assert by_cen == ["c", "b", "a"]

    def test_rank_rescaling_invariance(self):
        rng = np.random.default_rng(3)
        unc = {f"p{i}": float(rng.uniform(0, 1)) for i in range(12)}
        cen = {f"p{i}": float(rng.uniform(0, 1)) for i in range(12)}
        base = fused_rank(self.make_scores(unc, cen), alpha=0.3)
        # strictly monotone transforms of the raw scores leave ranks alone
        unc2 = {k: 10.0 * v + 3.0 for k, v in unc.items()}
        cen2 = {k: np.exp(v) for k, v in cen.items()}
        scaled = fused_rank(self.make_scores(unc2, cen2), alpha=0.3)
        assert [s.pair_id for s in scaled] == [s.pair_id for s in base]
        assert [s.fused_rank for s in scaled] == [s.fused_rank for s in base]

    def test_fused_tie_broken_by_pair_id(self):
        unc = {"x": 0.9, "y": 0.1}
        cen = {"x": 0.1, "y": 0.9}
        out = fused_rank(self.make_scores(unc, cen), alpha=0.5)
        assert [s.pair_id for s in out] == ["x", "y"]
        assert out[0].fused_rank == out[1].fused_rank

    def test_alpha_validated(self):
        with pytest.raises(ValueError, match="alpha"):
            fused_rank([], alpha=-0.1)


class TestScoreNodes:
    def test_iteration_scoring_end_to_end(self):
        pool = random_encodings(50, seed=9)
        labeled = random_encodings(10, seed=10, prefix="l")
        labels = {e.pair_id: int(i % 2 == 0) for i, e in enumerate(labeled)}
        g_plus, g_minus, g_het = build_iteration_graphs(
            pool, labeled, labels, q=3, extra_ratio=0.05, bounds=ClusterBounds(0.1, 0.5), seed=1
        )
        comps = {1: connected_components(g_plus), 0: connected_components(g_minus)}
        graphs = {1: g_plus, 0: g_minus}
        scores = score_nodes(g_het, comps, graphs, beta=0.5)
        assert set(scores) == {e.pair_id for e in pool}
        for e in pool:
            s = scores[e.pair_id]
            assert s.prediction == e.prediction
            assert s.confidence == pytest.approx(e.confidence)
            assert s.uncertainty == pytest.approx(
                uncertainty_score(e.confidence, s.spatial_confidence, 0.5)
            )
            assert s.component_id >= 0
        # centrality sums to one inside every component
        for side in (0, 1):
            for comp_id, comp in enumerate(comps[side].components):
                total = sum(scores[v].centrality for v in comp if v in scores)
                assert total == pytest.approx(1.0, abs=1e-6)
