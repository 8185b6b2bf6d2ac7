import numpy as np
import pytest

from sensewsi import corpus as corpus_mod
from sensewsi.induction import TrainingConfig


def random_corpus_lines(n_words=30, n_lines=100, min_len=3, max_len=12, seed=0, prefix="word"):
    rng = np.random.default_rng(seed)
    words = [f"{prefix}{i:03d}" for i in range(n_words)]
    return [
        " ".join(rng.choice(words, size=int(rng.integers(min_len, max_len + 1))))
        for _ in range(n_lines)
    ]


@pytest.fixture(scope="session")
def small_corpus():
    lines = random_corpus_lines(n_words=30, n_lines=150, seed=0)
    return corpus_mod.EncodedCorpus.from_lines(lines, min_count=1)


@pytest.fixture
def tiny_config():
    return TrainingConfig(
        dim=8,
        k=2,
        window=3,
        negatives=3,
        subsample=1e-2,
        multi_sense_size=15,
        min_count=1,
        seed=5,
    )
