"""Built-in baseline matcher and the encoding exchange format.

The matcher turns each candidate pair into (representation, confidence,
prediction): hashed character-trigram bag-of-features over the serialized
pair text, one trained hidden layer of width ``hidden_dim`` whose activation
is the pair representation, and a sigmoid match-probability head. It exists
to feed the selection engine on a CPU in seconds; heavyweight external
matchers can be plugged in through the JSON Lines encoding format instead.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse

from almatch.dataset import CandidatePair, serialize_pair


@dataclass
class MatcherConfig:
    feature_space_size: int = 2**18
    n_gram_length: int = 3
    hidden_dim: int = 64
    epochs: int = 120
    learning_rate: float = 2.0
    batch_size: int = 256
    seed: int = 0

    def __post_init__(self):
        for name in ("feature_space_size", "n_gram_length", "hidden_dim", "epochs", "batch_size"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class PairEncoding:
    """Matcher output for one pair: latent vector, match probability, prediction."""

    pair_id: str
    representation: np.ndarray
    confidence: float
    prediction: int

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence must be in [0,1], got {self.confidence}")
        if self.prediction != int(self.confidence >= 0.5):
            raise ValueError("prediction inconsistent with 0.5 confidence threshold")
        if not np.all(np.isfinite(self.representation)):
            raise ValueError("representation has non-finite entries")


class Featurizer:
    """Hashed character n-gram features with a compact observed-bucket remap.

    The serialized pair is split at its side separator and each side is
    reduced to a character n-gram multiset; every n-gram then contributes
    two hashed features, its across-side overlap count min(c_left, c_right)
    and its disagreement count |c_left - c_right|. Matching is a relation
    between the sides, so the overlap/disagreement split is what makes the
    signal linearly accessible; a bag over the concatenation alone would
    bury it in count statistics.

    Hashing uses crc32 so feature ids are stable across processes. Buckets
    never seen during :meth:`fit` carry no trained weight and are dropped at
    transform time. Per-pair hashed counts are cached by pair_id, so repeated
    transforms of the same dataset cost one pass total.
    """

    def __init__(self, config: MatcherConfig):
        self.config = config
        self.bucket_to_col: dict[int, int] = {}
        self._cache: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        self._remapped: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def n_columns(self) -> int:
        return len(self.bucket_to_col)

    @staticmethod
    def _ngram_counts(text: bytes, n: int) -> dict[bytes, int]:
        counts: dict[bytes, int] = {}
        for i in range(max(len(text) - n + 1, 1)):
            gram = text[i : i + n]
            counts[gram] = counts.get(gram, 0) + 1
        return counts

    def _hashed_counts(self, pair: CandidatePair) -> tuple[np.ndarray, np.ndarray]:
        cached = self._cache.get(pair.pair_id)
        if cached is not None:
            return cached
        n = self.config.n_gram_length
        space = self.config.feature_space_size
        left, _, right = serialize_pair(pair).partition(" [SEP] ")
        lc = self._ngram_counts(left.encode("utf-8"), n)
        rc = self._ngram_counts(right.encode("utf-8"), n)
        counts: dict[int, int] = {}
        for gram in lc.keys() | rc.keys():
            a, b = lc.get(gram, 0), rc.get(gram, 0)
            shared, diff = min(a, b), abs(a - b)
            if shared:
                bucket = zlib.crc32(b"S:" + gram) % space
                counts[bucket] = counts.get(bucket, 0) + shared
            if diff:
                bucket = zlib.crc32(b"D:" + gram) % space
                counts[bucket] = counts.get(bucket, 0) + diff
        buckets = np.fromiter(counts.keys(), dtype=np.int64, count=len(counts))
        values = np.fromiter(counts.values(), dtype=np.float32, count=len(counts))
        order = np.argsort(buckets)
        entry = (buckets[order], values[order])
        self._cache[pair.pair_id] = entry
        return entry

    def fit(self, pairs: list[CandidatePair]) -> "Featurizer":
        for pair in pairs:
            buckets, _ = self._hashed_counts(pair)
            for b in buckets.tolist():
                if b not in self.bucket_to_col:
                    self.bucket_to_col[b] = len(self.bucket_to_col)
        self._remapped.clear()
        return self

    def _remap(self, pair: CandidatePair) -> tuple[np.ndarray, np.ndarray]:
        cached = self._remapped.get(pair.pair_id)
        if cached is not None:
            return cached
        buckets, values = self._hashed_counts(pair)
        lookup = self.bucket_to_col
        keep = [i for i, b in enumerate(buckets.tolist()) if b in lookup]
        cols = np.array([lookup[buckets[i]] for i in keep], dtype=np.int32)
        vals = values[keep]
        norm = np.sqrt(float((vals**2).sum()))
        if norm > 0:
            vals = vals / norm
        entry = (cols, vals.astype(np.float32))
        self._remapped[pair.pair_id] = entry
        return entry

    def transform(self, pairs: list[CandidatePair]) -> sparse.csr_matrix:
        indptr = [0]
        indices: list[np.ndarray] = []
        data: list[np.ndarray] = []
        for pair in pairs:
            cols, vals = self._remap(pair)
            indices.append(cols)
            data.append(vals)
            indptr.append(indptr[-1] + len(cols))
        X = sparse.csr_matrix(
            (
                np.concatenate(data) if data else np.empty(0, np.float32),
                np.concatenate(indices) if indices else np.empty(0, np.int32),
                np.array(indptr),
            ),
            shape=(len(pairs), max(self.n_columns, 1)),
        )
        return X


class ColdStartError(ValueError):
    """Training set lacks one of the classes; the matcher cannot start."""


class BaselineMatcher:
    """Trained baseline matcher; see module docstring for the architecture."""

    def __init__(self, config: MatcherConfig, featurizer: Featurizer,
                 W1: np.ndarray, b1: np.ndarray, w2: np.ndarray, b2: float):
        self.config = config
        self.featurizer = featurizer
        self.W1 = W1
        self.b1 = b1
        self.w2 = w2
        self.b2 = b2

    def _forward(self, X: sparse.csr_matrix) -> tuple[np.ndarray, np.ndarray]:
        hidden = np.tanh(X @ self.W1 + self.b1)
        logits = hidden @ self.w2 + self.b2
        conf = _sigmoid(logits)
        return hidden, conf

    def encode(self, pairs: list[CandidatePair]) -> list[PairEncoding]:
        X = self.featurizer.transform(pairs)
        hidden, conf = self._forward(X)
        # guard against representation-degenerate rows (cosine needs nonzero)
        conf = np.clip(conf, 1e-12, 1.0 - 1e-12)
        return [
            PairEncoding(
                pair_id=pair.pair_id,
                representation=hidden[i].astype(np.float64),
                confidence=float(conf[i]),
                prediction=int(conf[i] >= 0.5),
            )
            for i, pair in enumerate(pairs)
        ]


def _sigmoid(logits: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(logits, -30.0, 30.0)))


def _validation_f1(conf: np.ndarray, truth: np.ndarray) -> float:
    pred = conf >= 0.5
    tp = int(np.sum(pred & (truth == 1)))
    fp = int(np.sum(pred & (truth == 0)))
    fn = int(np.sum(~pred & (truth == 1)))
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 2 * precision * recall / (precision + recall)


def train_baseline(
    labeled: list[tuple[CandidatePair, int]],
    weak: list[tuple[CandidatePair, int]],
    config: MatcherConfig,
    validation: list[tuple[CandidatePair, int]] | None = None,
    featurizer: Featurizer | None = None,
) -> BaselineMatcher:
    """Train a fresh baseline matcher on labeled plus weak-labeled pairs.

    Parameters are re-initialized on every call (no carry-over between
    iterations). Weak examples are weighted equally with real labels. When a
    validation list is given, the parameters kept are those of the epoch with
    the best validation F1; among tied epochs the one with the lowest
    validation log-loss wins, since downstream selection ranks pairs by
    confidence and a sharper F1-tied epoch often ranks them worse.
    """
    if not labeled:
        raise ColdStartError("empty labeled set")
    classes = {label for _, label in labeled}
    if classes != {0, 1}:
        raise ColdStartError(f"training set has only class {classes}; need both")

    examples = list(labeled) + list(weak)
    if featurizer is None:
        pool = [p for p, _ in examples] + [p for p, _ in (validation or [])]
        featurizer = Featurizer(config).fit(pool)

    X = featurizer.transform([p for p, _ in examples])
    y = np.array([label for _, label in examples], dtype=np.float32)
    n, n_feat = X.shape

    rng = np.random.default_rng(config.seed)
    d = config.hidden_dim
    # rows are L2-normalized, so unit-scale weights give unit-scale
    # pre-activations; fan-in scaling would leave the hidden layer dead
    W1 = rng.normal(0.0, 1.0, size=(n_feat, d)).astype(np.float32)
    b1 = np.zeros(d, dtype=np.float32)
    w2 = rng.normal(0.0, 1.0 / np.sqrt(d), size=d).astype(np.float32)
    # bias at the class prior keeps early epochs off the all-negative cliff
    pos_rate = float(np.clip(y.mean(), 1e-3, 1 - 1e-3))
    b2 = float(np.log(pos_rate / (1 - pos_rate)))

    X_val = truth_val = None
    if validation:
        X_val = featurizer.transform([p for p, _ in validation])
        truth_val = np.array([label for _, label in validation])

    best: tuple[float, float, np.ndarray, np.ndarray, np.ndarray, float] | None = None
    lr = config.learning_rate
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            Xb = X[idx]
            hidden = np.tanh(Xb @ W1 + b1)
            logits = hidden @ w2 + b2
            conf = _sigmoid(logits)
            dz = (conf - y[idx]) / len(idx)
            grad_w2 = hidden.T @ dz
            grad_b2 = float(dz.sum())
            dh = np.outer(dz, w2) * (1.0 - hidden**2)
            # scatter-add the sparse-row gradient instead of forming X.T @ dh
            nnz_rows = np.repeat(np.arange(len(idx)), np.diff(Xb.indptr))
            np.add.at(W1, Xb.indices, -lr * (Xb.data[:, None] * dh[nnz_rows]))
            b1 -= lr * dh.sum(axis=0)
            w2 -= lr * grad_w2.astype(np.float32)
            b2 -= lr * grad_b2
        if X_val is not None:
            hidden_val = np.tanh(X_val @ W1 + b1)
            conf_val = _sigmoid(hidden_val @ w2 + b2)
            score = _validation_f1(conf_val, truth_val)
            clipped = np.clip(conf_val.astype(np.float64), 1e-12, 1.0 - 1e-12)
            loss = float(
                -np.mean(truth_val * np.log(clipped) + (1 - truth_val) * np.log(1 - clipped))
            )
            if best is None or (score, -loss) > (best[0], -best[1]):
                best = (score, loss, W1.copy(), b1.copy(), w2.copy(), b2)
    if best is not None:
        _, _, W1, b1, w2, b2 = best
    return BaselineMatcher(config, featurizer, W1, b1, w2, b2)


def encode_all(matcher: BaselineMatcher, pairs: list[CandidatePair]) -> list[PairEncoding]:
    """Encode pairs in order; one PairEncoding per input pair."""
    return matcher.encode(pairs)


def export_encodings(encodings: list[PairEncoding], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for enc in encodings:
            fh.write(
                json.dumps(
                    {
                        "pair_id": enc.pair_id,
                        "vector": [float(x) for x in enc.representation],
                        "confidence": enc.confidence,
                    }
                )
                + "\n"
            )


def import_encodings(path: str | Path, known_ids: set[str] | None = None) -> list[PairEncoding]:
    """Read encodings produced by an external matcher (or export_encodings).

    One JSON object per line: {pair_id, vector, confidence}. All vectors must
    share one dimension; confidences must lie in [0,1]; when known_ids is
    given, every pair_id must be a member.
    """
    encodings: list[PairEncoding] = []
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                pair_id = obj["pair_id"]
                vector = np.asarray(obj["vector"], dtype=np.float64)
                confidence = float(obj["confidence"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValueError(f"{path}: line {line_no}: {exc}") from exc
            if vector.ndim != 1:
                raise ValueError(f"{path}: line {line_no}: vector must be one-dimensional")
            if dim is None:
                dim = len(vector)
            elif len(vector) != dim:
                raise ValueError(
                    f"{path}: line {line_no}: vector dimension {len(vector)} != {dim}"
                )
            if not 0.0 <= confidence <= 1.0:
                raise ValueError(f"{path}: line {line_no}: confidence {confidence} outside [0,1]")
            if known_ids is not None and pair_id not in known_ids:
                raise ValueError(f"{path}: line {line_no}: unknown pair_id {pair_id!r}")
            encodings.append(
                PairEncoding(pair_id, vector, confidence, int(confidence >= 0.5))
            )
    return encodings
