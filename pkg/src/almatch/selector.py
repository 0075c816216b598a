"""Active-learning loop: budgets, selection, weak labels, iteration driver.

The per-iteration shape of a run:

1. train a fresh matcher on the labeled pairs plus last round's weak labels,
2. encode every pair, evaluate on the held-out test split (one curve point),
3. build the prediction-side graphs, score their nodes,
4. split the label budget between sides and across connected components,
5. pick the top-ranked members per component, ask the oracle, move the
   answers from the pool into the training set,
6. re-derive the weak label set for the next round.

A final train + evaluate after the last iteration contributes the closing
curve point, so a run with I iterations reports I + 1 points.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Protocol

import numpy as np

from almatch.clustering import ClusterBounds
from almatch.dataset import CandidatePair, DatasetSplit, LabelStore, draw_seed, oracle_label
from almatch.evaluation import (
    IterationReport,
    entropy_weak_labels,
    f1_scores,
    strategy_entropy_only,
    strategy_random,
)
from almatch.matcher import (
    BaselineMatcher,
    Featurizer,
    MatcherConfig,
    PairEncoding,
    encode_all,
    train_baseline,
)
from almatch.pairgraph import ComponentSet, build_iteration_graphs, connected_components
from almatch.scoring import NodeScores, fused_rank, score_nodes


def positive_budget(budget: int, iteration: int) -> int:
    """Match-side share of the batch: decays from 80% to a 50% floor.

    Uses round-half-up so an exact .5 product lands on the larger share.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    if iteration < 0:
        raise ValueError("iteration must be non-negative")
    frac = max(0.8 - iteration / 20.0, 0.5)
    return int(math.floor(budget * frac + 0.5))


def distribute_budget(
    sizes: dict[int, int],
    budget: int,
    rng: np.random.Generator,
) -> tuple[dict[int, int], int, list[int]]:
    """Spread a side budget over components proportionally to their size.

    Every component first gets the floor of its proportional share, capped
    at its selectable size. The remainder goes out one label per component
    in seeded random order over the still-unsaturated components, repeating
    rounds until either the remainder or the capacity runs out. Returns
    (counts, leftover, residue_order); leftover is whatever no component
    could absorb and is the caller's to hand to the other side.
    """
    counts = {cid: 0 for cid in sizes}
    if budget <= 0:
        return counts, max(budget, 0), []
    total = sum(sizes.values())
    if total <= 0:
        return counts, budget, []
    for cid, size in sizes.items():
        counts[cid] = min((budget * size) // total, size)
    residue = budget - sum(counts.values())
    residue_order: list[int] = []
    while residue > 0:
        open_ids = sorted(cid for cid in sizes if counts[cid] < sizes[cid])
        if not open_ids:
            break
        picks = rng.permutation(len(open_ids))[: min(residue, len(open_ids))]
        for i in picks:
            cid = open_ids[i]
            counts[cid] += 1
            residue -= 1
            residue_order.append(cid)
    return counts, residue, residue_order


@dataclass
class BudgetPlan:
    """Resolved per-component label counts for one iteration."""

    budget: int
    b_pos: int
    b_neg: int
    per_component_pos: dict[int, int] = field(default_factory=dict)
    per_component_neg: dict[int, int] = field(default_factory=dict)
    residue_pos: list[int] = field(default_factory=list)
    residue_neg: list[int] = field(default_factory=list)
    leftover: int = 0

    @property
    def planned(self) -> int:
        return sum(self.per_component_pos.values()) + sum(self.per_component_neg.values())


class LabelOracle(Protocol):
    """Anything that can turn a batch of pairs into labels."""

    def request(self, pairs: list[CandidatePair]) -> dict[str, int]: ...


class GroundTruthOracle:
    """Answers from the pairs' stored gold labels, journaling each one."""

    def __init__(self, store: LabelStore):
        self.store = store
        self.calls = 0

    def request(self, pairs: list[CandidatePair]) -> dict[str, int]:
        out = {}
        for pair in pairs:
            out[pair.pair_id] = oracle_label(pair, self.store, mode="oracle")
            self.calls += 1
        return out


class CallbackOracle:
    """Adapter for interactive front ends: delegates the whole batch."""

    def __init__(self, fn: Callable[[list[CandidatePair]], dict[str, int]]):
        self.fn = fn
        self.calls = 0

    def request(self, pairs: list[CandidatePair]) -> dict[str, int]:
        out = self.fn(pairs)
        missing = [p.pair_id for p in pairs if p.pair_id not in out]
        if missing:
            raise ValueError(f"oracle left {len(missing)} pairs unlabeled: {missing[:5]}")
        self.calls += len(pairs)
        return out


@dataclass
class LoopConfig:
    """Everything that pins down a run, and nothing that depends on data."""

    budget: int = 100
    iterations: int = 8
    seed_pos: int = 50
    seed_neg: int = 50
    q_neighbors: int = 15
    extra_ratio: float = 0.03
    bounds: ClusterBounds = field(default_factory=ClusterBounds)
    alpha: float = 0.75
    beta: float = 0.5
    rho: float = 0.85
    weak_budget: int | None = None
    use_weak_supervision: bool = True
    strategy: str = "battleship"
    seed: int = 0
    matcher: MatcherConfig = field(default_factory=MatcherConfig)

    def resolved_weak_budget(self) -> int:
        return self.budget if self.weak_budget is None else self.weak_budget


@dataclass
class LoopState:
    """Mutable run state threaded through iterations."""

    split: DatasetSplit
    store: LabelStore
    train_ids: list[str]
    pool_ids: list[str]
    weak_set: list[tuple[str, int]] = field(default_factory=list)
    reports: list[IterationReport] = field(default_factory=list)
    iteration: int = 0
    exhausted: bool = False
    featurizer: Featurizer | None = None
    pairs_by_id: dict[str, CandidatePair] = field(default_factory=dict)
    encodings: dict[str, PairEncoding] = field(default_factory=dict)
    matcher: BaselineMatcher | None = None

    def pair(self, pair_id: str) -> CandidatePair:
        return self.pairs_by_id[pair_id]


def _derived_seed(root: int, *tags: int) -> int:
    return int(np.random.SeedSequence([root, *tags]).generate_state(1)[0])


def _train_and_eval(
    state: LoopState, config: LoopConfig
) -> tuple[BaselineMatcher, dict[str, PairEncoding], tuple[float, float, float]]:
    labeled = [(state.pair(pid), state.store.get(pid)) for pid in state.train_ids]
    weak = [(state.pair(pid), lab) for pid, lab in state.weak_set]
    mcfg = replace(config.matcher, seed=_derived_seed(config.seed, 1, state.iteration))
    matcher = train_baseline(
        labeled,
        weak,
        mcfg,
        validation=[(p, p.ground_truth) for p in state.split.validation],
        featurizer=state.featurizer,
    )
    everything = (
        [state.pair(pid) for pid in state.train_ids]
        + [state.pair(pid) for pid in state.pool_ids]
        + state.split.test
    )
    encodings = {e.pair_id: e for e in encode_all(matcher, everything)}
    if not state.split.test:
        # live annotation datasets carry no held-out labels; curve stays empty
        return matcher, encodings, (None, None, None)
    preds = {p.pair_id: encodings[p.pair_id].prediction for p in state.split.test}
    truth = {p.pair_id: p.ground_truth for p in state.split.test}
    return matcher, encodings, f1_scores(preds, truth)


def _side_components(
    scores: dict[str, NodeScores], components: ComponentSet | None
) -> list[list[str]]:
    if components is None:
        return []
    return [[pid for pid in comp if pid in scores] for comp in components.components]


def _select_for_side(
    comps: list[list[str]],
    scores: dict[str, NodeScores],
    budget: int,
    alpha: float,
    taken: set[str],
    rng: np.random.Generator,
) -> tuple[list[str], dict[int, int], list[int], int]:
    """Distribute one side's budget over its components and rank-pick."""
    if budget <= 0:
        return [], {}, [], max(budget, 0)
    sizes = {
        cid: sum(1 for pid in comp if pid not in taken) for cid, comp in enumerate(comps)
    }
    counts, leftover, residue = distribute_budget(sizes, budget, rng)
    picked: list[str] = []
    for cid, comp in enumerate(comps):
        want = counts.get(cid, 0)
        if want <= 0:
            continue
        ranked = fused_rank([scores[pid] for pid in comp if pid not in taken], alpha)
        picked.extend(s.pair_id for s in ranked[:want])
    return picked, counts, residue, leftover


def _fallback_by_confidence(
    encodings: dict[str, PairEncoding],
    pool_ids: list[str],
    side: int,
    budget: int,
    taken: set[str],
) -> list[str]:
    """Cold-start path: no graph on this side, rank the raw pool instead."""
    if budget <= 0:
        return []
    cands = [encodings[pid] for pid in pool_ids if pid not in taken]
    sign = -1.0 if side == 1 else 1.0
    cands.sort(key=lambda e: (sign * e.confidence, e.pair_id))
    return [e.pair_id for e in cands[:budget]]


def select_samples(
    scores: dict[str, NodeScores],
    comps_pos: ComponentSet | None,
    comps_neg: ComponentSet | None,
    encodings: dict[str, PairEncoding],
    pool_ids: list[str],
    budget: int,
    iteration: int,
    config: LoopConfig,
) -> tuple[list[str], BudgetPlan]:
    """Pick one iteration's label batch and report how the budget resolved.

    Leftover budget a side cannot absorb (small graphs, empty cold-start
    side) moves to the other side; a final second pass returns anything the
    second side bounced. Selection never exceeds min(budget, pool).
    """
    budget = min(budget, len(pool_ids))
    b_pos = min(positive_budget(config.budget, iteration), budget)
    b_neg = budget - b_pos
    plan = BudgetPlan(budget=budget, b_pos=b_pos, b_neg=b_neg)
    taken: set[str] = set()
    selected: list[str] = []

    pos_comps = _side_components(scores, comps_pos)
    neg_comps = _side_components(scores, comps_neg)
    rng_pos = np.random.default_rng([config.seed, 3, iteration, 1])
    rng_neg = np.random.default_rng([config.seed, 3, iteration, 0])

    def run_side(side: int, comps: list[list[str]], amount: int, rng) -> int:
        if amount <= 0:
            return 0
        if not comps:
            picked = _fallback_by_confidence(encodings, pool_ids, side, amount, taken)
            counts, residue = {}, []
            leftover = amount - len(picked)
        else:
            picked, counts, residue, leftover = _select_for_side(
                comps, scores, amount, config.alpha, taken, rng
            )
        selected.extend(picked)
        taken.update(picked)
        if side == 1:
            for cid, n in counts.items():
                plan.per_component_pos[cid] = plan.per_component_pos.get(cid, 0) + n
            plan.residue_pos.extend(residue)
        else:
            for cid, n in counts.items():
                plan.per_component_neg[cid] = plan.per_component_neg.get(cid, 0) + n
            plan.residue_neg.extend(residue)
        return leftover

    left = run_side(1, pos_comps, b_pos, rng_pos)
    left = run_side(0, neg_comps, b_neg + left, rng_neg)
    if left > 0:
        left = run_side(1, pos_comps, left, rng_pos)
    plan.leftover = left
    return selected, plan


def weak_supervision(
    scores: dict[str, NodeScores],
    comps_pos: ComponentSet | None,
    comps_neg: ComponentSet | None,
    weak_budget: int,
    iteration: int,
    config: LoopConfig,
    exclude: set[str],
) -> list[tuple[str, int]]:
    """Free labels for the next round: per side, the same proportional
    spread over components, then the LEAST uncertain members, labeled with
    the model's own prediction. Recomputed from scratch every iteration."""
    if weak_budget <= 0:
        return []
    per_side = weak_budget // 2
    out: list[tuple[str, int]] = []
    for side, comps_set in ((1, comps_pos), (0, comps_neg)):
        comps = _side_components(scores, comps_set)
        if not comps:
            continue
        rng = np.random.default_rng([config.seed, 5, iteration, side])
        sizes = {
            cid: sum(1 for pid in comp if pid not in exclude)
            for cid, comp in enumerate(comps)
        }
        counts, _, _ = distribute_budget(sizes, per_side, rng)
        for cid, comp in enumerate(comps):
            want = counts.get(cid, 0)
            if want <= 0:
                continue
            members = [scores[pid] for pid in comp if pid not in exclude]
            members.sort(key=lambda s: (s.uncertainty, s.pair_id))
            out.extend((s.pair_id, side) for s in members[:want])
    return out


def _weak_precision(state: LoopState, weak: list[tuple[str, int]]) -> float | None:
    """Precision of the positive weak labels against known ground truth."""
    known = [
        pid for pid, lab in weak if lab == 1 and state.pair(pid).ground_truth is not None
    ]
    if not known:
        return None
    hits = sum(1 for pid in known if state.pair(pid).ground_truth == 1)
    return hits / len(known)


def run_iteration(
    state: LoopState, config: LoopConfig, oracle: LabelOracle | None = None
) -> LoopState:
    """One full loop iteration, mutating and returning the state."""
    if oracle is None:
        oracle = GroundTruthOracle(state.store)
    t0 = time.perf_counter()
    matcher, encodings, (precision, recall, f1) = _train_and_eval(state, config)
    state.matcher, state.encodings = matcher, encodings

    budget = min(config.budget, len(state.pool_ids))
    if config.strategy == "battleship":
        graph_seed = _derived_seed(config.seed, 2, state.iteration)
        pos_graph, neg_graph, het_graph = build_iteration_graphs(
            [encodings[pid] for pid in state.pool_ids],
            [encodings[pid] for pid in state.train_ids],
            {pid: state.store.get(pid) for pid in state.train_ids},
            q=config.q_neighbors,
            extra_ratio=config.extra_ratio,
            bounds=config.bounds,
            seed=graph_seed,
        )
        comps_pos = connected_components(pos_graph)
        comps_neg = connected_components(neg_graph)
        scores = score_nodes(
            het_graph,
            {1: comps_pos, 0: comps_neg},
            {1: pos_graph, 0: neg_graph},
            beta=config.beta,
            rho=config.rho,
        )
        selected, _plan = select_samples(
            scores,
            comps_pos,
            comps_neg,
            encodings,
            state.pool_ids,
            budget,
            state.iteration,
            config,
        )
    elif config.strategy == "random":
        rng = np.random.default_rng([config.seed, 4, state.iteration])
        selected = strategy_random(sorted(state.pool_ids), budget, rng)
    elif config.strategy == "entropy":
        pool_encs = [encodings[pid] for pid in state.pool_ids]
        selected = strategy_entropy_only(pool_encs, budget)
    else:
        raise ValueError(f"unknown strategy: {config.strategy!r}")

    answers = oracle.request([state.pair(pid) for pid in selected])
    picked = set(selected)
    state.train_ids.extend(selected)
    state.pool_ids = [pid for pid in state.pool_ids if pid not in picked]

    weak: list[tuple[str, int]] = []
    if config.use_weak_supervision and config.resolved_weak_budget() > 0:
        if config.strategy == "battleship":
            weak = weak_supervision(
                scores,
                comps_pos,
                comps_neg,
                config.resolved_weak_budget(),
                state.iteration,
                config,
                exclude=picked,
            )
        elif config.strategy == "entropy":
            pool_encs = [encodings[pid] for pid in state.pool_ids]
            weak = entropy_weak_labels(pool_encs, config.resolved_weak_budget())
        # the random baseline never gets weak labels
    state.weak_set = weak

    report = IterationReport(
        iteration=state.iteration,
        labels_used=len(state.train_ids) - len(selected),
        f1=f1,
        precision=precision,
        recall=recall,
        selected_ids=list(selected),
        weak_precision=_weak_precision(state, weak),
        timing=time.perf_counter() - t0,
        pool_exhausted=len(selected) < config.budget,
    )
    state.reports.append(report)
    state.iteration += 1
    if not state.pool_ids:
        state.exhausted = True
    _ = answers  # journaled by the oracle; kept for symmetry with human mode
    return state


def final_report(state: LoopState, config: LoopConfig) -> LoopState:
    """Closing train + evaluate after the last augmentation."""
    t0 = time.perf_counter()
    matcher, encodings, (precision, recall, f1) = _train_and_eval(state, config)
    state.matcher, state.encodings = matcher, encodings
    state.reports.append(
        IterationReport(
            iteration=state.iteration,
            labels_used=len(state.train_ids),
            f1=f1,
            precision=precision,
            recall=recall,
            selected_ids=[],
            weak_precision=_weak_precision(state, state.weak_set),
            timing=time.perf_counter() - t0,
        )
    )
    return state


def init_state(
    split: DatasetSplit,
    config: LoopConfig,
    store: LabelStore | None = None,
    featurizer: Featurizer | None = None,
    oracle: LabelOracle | None = None,
) -> LoopState:
    """Draw and label the seed set, fit the featurizer, set up the pool."""
    store = store if store is not None else LabelStore()
    pairs_by_id = {p.pair_id: p for p in split.train_pool + split.validation + split.test}
    if featurizer is None:
        featurizer = Featurizer(config.matcher)
        featurizer.fit(list(pairs_by_id.values()))
    if all(p.ground_truth is not None for p in split.train_pool):
        seed_ids = draw_seed(split.train_pool, config.seed_pos, config.seed_neg, config.seed)
    else:
        # unlabeled live data cannot be stratified; fall back to a uniform draw
        rng = np.random.default_rng(config.seed)
        n_seed = min(config.seed_pos + config.seed_neg, len(split.train_pool))
        chosen = rng.choice(len(split.train_pool), size=n_seed, replace=False)
        seed_ids = [split.train_pool[i].pair_id for i in sorted(chosen)]
    if oracle is None:
        oracle = GroundTruthOracle(store)
    oracle.request([pairs_by_id[pid] for pid in seed_ids])
    seed_set = set(seed_ids)
    pool_ids = [p.pair_id for p in split.train_pool if p.pair_id not in seed_set]
    return LoopState(
        split=split,
        store=store,
        train_ids=seed_ids,
        pool_ids=pool_ids,
        featurizer=featurizer,
        pairs_by_id=pairs_by_id,
    )


def run_active_learning(
    split: DatasetSplit,
    config: LoopConfig,
    oracle: LabelOracle | None = None,
    store: LabelStore | None = None,
    featurizer: Featurizer | None = None,
    on_report: Callable[[IterationReport], None] | None = None,
) -> LoopState:
    """Seed, iterate, close; returns the state with I+1 reports (fewer only
    when the pool dries up first)."""
    state = init_state(split, config, store=store, featurizer=featurizer, oracle=oracle)
    for _ in range(config.iterations):
        run_iteration(state, config, oracle=oracle)
        if on_report is not None:
            on_report(state.reports[-1])
        if state.exhausted:
            break
    final_report(state, config)
    if on_report is not None:
        on_report(state.reports[-1])
    return state
