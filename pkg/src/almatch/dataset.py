"""Candidate-pair datasets: loading, serialization, splits, and the label store.

A dataset is a flat list of candidate pairs (one left record, one right
record, optional ground-truth label). The on-disk format is CSV with
``left_<attr>`` / ``right_<attr>`` column prefixes, an optional ``id`` column
for stable pair ids, and an optional ``label`` column.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Record:
    """One side of a candidate pair: an ordered list of (attribute, value)."""

    record_id: str
    attributes: tuple[tuple[str, str], ...]

    def serialize(self) -> str:
        return " ".join(f"[COL] {name} [VAL] {value}" for name, value in self.attributes)


@dataclass(frozen=True)
class CandidatePair:
    """A left/right record pair, the unit of labeling.

    ``ground_truth`` is 1 for a match, 0 for a non-match, None when unknown
    (live annotation datasets).
    """

    pair_id: str
    left: Record
    right: Record
    ground_truth: int | None = None


@dataclass
class DatasetSplit:
    """Train-pool / validation / test partition of the candidate pairs.

    ``train_pool`` is the working set the active-learning loop draws from;
    validation and test must be fully labeled.
    """

    train_pool: list[CandidatePair]
    validation: list[CandidatePair]
    test: list[CandidatePair]

    def __post_init__(self):
        ids: set[str] = set()
        for part in (self.train_pool, self.validation, self.test):
            for pair in part:
                if pair.pair_id in ids:
                    raise ValueError(f"pair_id {pair.pair_id!r} appears in more than one split")
                ids.add(pair.pair_id)
        for name, part in (("validation", self.validation), ("test", self.test)):
            for pair in part:
                if pair.ground_truth is None:
                    raise ValueError(f"{name} pair {pair.pair_id!r} has no ground-truth label")


class LabelStore:
    """Append-only record of collected labels with provenance.

    A pair's label never changes once recorded; a conflicting re-record is an
    error, an identical one is a no-op. When constructed with a path, every
    accepted label is appended to a JSON Lines journal on receipt, so a
    crashed session can be resumed from disk via :meth:`load`.
    """

    def __init__(self, path: str | Path | None = None):
        self.labels: dict[str, int] = {}
        self.provenance: dict[str, str] = {}
        self.path = Path(path) if path is not None else None

    def get(self, pair_id: str) -> int | None:
        return self.labels.get(pair_id)

    def __contains__(self, pair_id: str) -> bool:
        return pair_id in self.labels

    def __len__(self) -> int:
        return len(self.labels)

    def record(self, pair_id: str, label: int, provenance: str = "oracle") -> None:
        if label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {label!r}")
        if pair_id in self.labels:
            if self.labels[pair_id] != label:
                raise ValueError(
                    f"conflicting label for {pair_id!r}: "
                    f"stored {self.labels[pair_id]}, got {label}"
                )
            return
        self.labels[pair_id] = label
        self.provenance[pair_id] = provenance
        if self.path is not None:
            entry = {
                "pair_id": pair_id,
                "label": label,
                "provenance": provenance,
                "timestamp": time.time(),
            }
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "LabelStore":
        store = cls()
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                entry = json.loads(line)
                store.record(entry["pair_id"], entry["label"], entry.get("provenance", "oracle"))
        store.path = Path(path)
        return store


def load_candidate_pairs(path: str | Path, format: str = "csv") -> list[CandidatePair]:
    """Load candidate pairs from a CSV file.

    The header names attributes with ``left_``/``right_`` prefixes; an
    optional ``id`` column supplies pair ids (default: the row index) and an
    optional ``label`` column supplies ground truth.
    """
    if format != "csv":
        raise ValueError(f"unsupported dataset format {format!r}")
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        left_cols = [(i, name[len("left_"):]) for i, name in enumerate(header) if name.startswith("left_")]
        right_cols = [(i, name[len("right_"):]) for i, name in enumerate(header) if name.startswith("right_")]
        if not left_cols or not right_cols:
            raise ValueError(
                f"{path}: expected left_<attr> and right_<attr> columns "
                f"(convention: one pair per row, attributes prefixed by side), got {header}"
            )
        id_col = header.index("id") if "id" in header else None
        label_col = header.index("label") if "label" in header else None

        pairs: list[CandidatePair] = []
        seen: set[str] = set()
        for row_no, row in enumerate(reader):
            if len(row) != len(header):
                raise ValueError(
                    f"{path}: row {row_no + 2} has {len(row)} columns, header has {len(header)}"
                )
            pair_id = row[id_col] if id_col is not None else str(row_no)
            if pair_id in seen:
                raise ValueError(f"{path}: duplicate pair_id {pair_id!r} at row {row_no + 2}")
            seen.add(pair_id)
            label: int | None = None
            if label_col is not None and row[label_col] != "":
                label = int(row[label_col])
                if label not in (0, 1):
                    raise ValueError(f"{path}: row {row_no + 2} label must be 0/1, got {label}")
            left = Record(f"{pair_id}_l", tuple((name, row[i]) for i, name in left_cols))
            right = Record(f"{pair_id}_r", tuple((name, row[i]) for i, name in right_cols))
            pairs.append(CandidatePair(pair_id, left, right, label))
    return pairs


def serialize_pair(pair: CandidatePair) -> str:
    """Render a pair as one text sequence with column/value markers.

    Format: ``[CLS] [COL] <name> [VAL] <value> ... [SEP] <right side>``.
    Empty values keep their ``[COL] <name> [VAL]`` group with an empty value
    segment, so serialization is injective for a fixed attribute order.
    """
    return f"[CLS] {pair.left.serialize()} [SEP] {pair.right.serialize()}"


def split_dataset(
    pairs: list[CandidatePair],
    ratios: tuple[int, int, int] = (3, 1, 1),
    seed: int = 0,
) -> DatasetSplit:
    """Shuffle and split pairs into train-pool / validation / test by ratio."""
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(pairs))
    total = sum(ratios)
    n = len(pairs)
    n_train = int(round(n * ratios[0] / total))
    n_val = int(round(n * ratios[1] / total))
    shuffled = [pairs[i] for i in order]
    return DatasetSplit(
        train_pool=shuffled[:n_train],
        validation=shuffled[n_train : n_train + n_val],
        test=shuffled[n_train + n_val :],
    )


def draw_seed(
    pool: list[CandidatePair],
    n_pos: int = 50,
    n_neg: int = 50,
    seed: int = 0,
) -> list[str]:
    """Draw the initial labeled seed: n_pos positives + n_neg negatives.

    Uniform without replacement within each ground-truth class, deterministic
    for a fixed seed. Raises when the pool cannot supply either class.
    """
    pos = [p.pair_id for p in pool if p.ground_truth == 1]
    neg = [p.pair_id for p in pool if p.ground_truth == 0]
    if len(pos) < n_pos or len(neg) < n_neg:
        raise ValueError(
            f"seed draw needs {n_pos} positives and {n_neg} negatives; "
            f"pool has {len(pos)} and {len(neg)}"
        )
    rng = np.random.default_rng(seed)
    chosen_pos = rng.choice(len(pos), size=n_pos, replace=False) if n_pos else []
    chosen_neg = rng.choice(len(neg), size=n_neg, replace=False) if n_neg else []
    return [pos[i] for i in chosen_pos] + [neg[i] for i in chosen_neg]


class PendingLabel(Exception):
    """Raised in human mode when a requested label has not been submitted yet."""


def oracle_label(pair: CandidatePair, store: LabelStore, mode: str = "oracle") -> int:
    """Return the label for a pair and record it in the store.

    In oracle mode the pair's ground truth is the answer. In human mode the
    label must already have been submitted to the store (the labeling
    service's job); a missing submission raises :class:`PendingLabel`, which
    callers treat as "wait", not as failure.
    """
    if mode == "oracle":
        if pair.ground_truth is None:
            raise ValueError(f"pair {pair.pair_id!r} has no ground truth; oracle mode needs labels")
        store.record(pair.pair_id, pair.ground_truth, provenance="oracle")
        return pair.ground_truth
    if mode == "human":
        label = store.get(pair.pair_id)
        if label is None:
            raise PendingLabel(pair.pair_id)
        return label
    raise ValueError(f"unknown oracle mode {mode!r}")
