"""Shared fixtures: small deterministic datasets and fast configs."""

import pytest

from almatch.dataset import CandidatePair, Record, split_dataset
from almatch.matcher import Featurizer, MatcherConfig
from almatch.synth import make_benchmark


def make_pair(pair_id: str, left: dict, right: dict, label=None) -> CandidatePair:
    return CandidatePair(
        pair_id,
        Record(f"{pair_id}_l", tuple(left.items())),
        Record(f"{pair_id}_r", tuple(right.items())),
        label,
    )


@pytest.fixture(scope="session")
def bench_pairs():
    return make_benchmark(n_pairs=700, pos_frac=0.25, seed=11)


@pytest.fixture(scope="session")
def bench_split(bench_pairs):
    return split_dataset(bench_pairs, seed=11)


@pytest.fixture(scope="session")
def fast_matcher_config():
    return MatcherConfig(epochs=10)


@pytest.fixture(scope="session")
def bench_featurizer(bench_split, fast_matcher_config):
    feat = Featurizer(fast_matcher_config)
    feat.fit(bench_split.train_pool + bench_split.validation + bench_split.test)
    return feat
