"""Metrics and comparison strategies: F1, AUC of the F1 curve, baselines.

The AUC convention: trapezoidal area under the piecewise-linear F1 curve
(F1 in percent) over the cumulative-labels axis, divided by 100. A constant
50% curve from 100 to 900 labels scores 400. Comparisons between strategies
always use this one convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from almatch.matcher import PairEncoding
from almatch.scoring import conditional_entropy


def f1_scores(predictions: dict[str, int], truth: dict[str, int]) -> tuple[float, float, float]:
    """(precision, recall, f1) with the 0/0 conventions fixed at zero."""
    if set(predictions) != set(truth):
        raise ValueError("predictions and truth must cover the same pair ids")
    tp = fp = fn = 0
    for pid, pred in predictions.items():
        actual = truth[pid]
        if pred == 1 and actual == 1:
            tp += 1
        elif pred == 1 and actual == 0:
            fp += 1
        elif pred == 0 and actual == 1:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def auc_f1(points: list[tuple[float, float]]) -> float:
    """Area under the F1 curve over the labels axis; F1 given in [0,1]."""
    if len(points) < 2:
        raise ValueError("AUC needs at least two curve points")
    labels = [p[0] for p in points]
    if any(b < a for a, b in zip(labels, labels[1:])):
        raise ValueError("points must be sorted by labels_used")
    percents = np.array([p[1] for p in points]) * 100.0
    return float(np.trapezoid(percents, np.array(labels, dtype=np.float64)) / 100.0)


@dataclass
class IterationReport:
    """One F1-curve point plus the selection log of that iteration.

    Metrics are None when the run has no labeled test split (live
    annotation); such reports still log the selection.
    """

    iteration: int
    labels_used: int
    f1: float | None
    precision: float | None
    recall: float | None
    selected_ids: list[str] = field(default_factory=list)
    weak_precision: float | None = None
    timing: float = 0.0
    pool_exhausted: bool = False

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "labels_used": self.labels_used,
            "f1": self.f1,
            "precision": self.precision,
            "recall": self.recall,
            "selected_ids": list(self.selected_ids),
            "weak_precision": self.weak_precision,
            "timing": self.timing,
            "pool_exhausted": self.pool_exhausted,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "IterationReport":
        return cls(**obj)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def reports_auc(reports: list[IterationReport]) -> float:
    if any(r.f1 is None for r in reports):
        raise ValueError("curve has unevaluated points (no test labels)")
    return auc_f1([(r.labels_used, r.f1) for r in reports])


def strategy_random(pool_ids: list[str], budget: int, rng: np.random.Generator) -> list[str]:
    """Uniform selection without replacement; the whole pool if it is short."""
    if budget <= 0:
        return []
    if budget >= len(pool_ids):
        return list(pool_ids)
    chosen = rng.choice(len(pool_ids), size=budget, replace=False)
    return [pool_ids[i] for i in chosen]


def strategy_entropy_only(pool_encodings: list[PairEncoding], budget: int) -> list[str]:
    """Most-uncertain selection per predicted side, half the budget each.

    Ranks by the entropy of the match probability, no graphs involved. When
    one side runs short the other side fills the gap; ties break toward the
    smaller pair id so dichotomous confidence profiles stay deterministic.
    """
    if budget <= 0:
        return []
    sides: dict[int, list[PairEncoding]] = {0: [], 1: []}
    for enc in pool_encodings:
        sides[enc.prediction].append(enc)
    for encs in sides.values():
        encs.sort(key=lambda e: (-conditional_entropy(e.confidence), e.pair_id))
    want_pos = budget // 2
    want_neg = budget - want_pos
    take_pos = sides[1][:want_pos]
    take_neg = sides[0][:want_neg]
    shortfall = budget - len(take_pos) - len(take_neg)
    if shortfall > 0:
        if len(take_pos) < want_pos:
            take_neg = sides[0][: want_neg + shortfall]
        else:
            take_pos = sides[1][: want_pos + shortfall]
    return [e.pair_id for e in take_pos] + [e.pair_id for e in take_neg]


def entropy_weak_labels(pool_encodings: list[PairEncoding], weak_budget: int) -> list[tuple[str, int]]:
    """Most-confident pairs per side (lowest entropy), labeled by prediction."""
    if weak_budget <= 0:
        return []
    per_side = weak_budget // 2
    out: list[tuple[str, int]] = []
    for side in (1, 0):
        encs = [e for e in pool_encodings if e.prediction == side]
        encs.sort(key=lambda e: (conditional_entropy(e.confidence), e.pair_id))
        out.extend((e.pair_id, side) for e in encs[:per_side])
    return out
