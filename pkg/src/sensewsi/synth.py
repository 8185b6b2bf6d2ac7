"""Synthetic pseudoword benchmarks with known ground-truth senses.

Two topics draw sentences from disjoint Zipf-distributed vocabularies; one
frequent anchor word of each topic is replaced by a shared pseudoword, so
every pseudoword occurrence has a known gold sense (its topic). Held-out
instances of the pseudoword give a labeled test set for sense recovery.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .evaluation import Clustering
from .wsi import Instance


@dataclass
class PseudowordBenchmark:
    lines: list[str]
    pseudoword: str
    instances: list[Instance]
    gold: Clustering
    topic_words: tuple[list[str], list[str]]


def _zipf_probs(n: int, a: float) -> np.ndarray:
    p = 1.0 / np.arange(1, n + 1, dtype=np.float64) ** a
    return p / p.sum()


def make_pseudoword_benchmark(
    n_tokens: int = 2_000_000,
    vocab_per_topic: int = 400,
    zipf_a: float = 1.05,
    sentence_len: tuple[int, int] = (8, 20),
    anchor_rank: int = 3,
    n_test_per_sense: int = 300,
    seed: int = 7,
    pseudoword: str = "pseudotarget",
) -> PseudowordBenchmark:
    """Build the training lines plus held-out pseudoword test instances.

    Topic words are "t0w###"/"t1w###" (length > 3, so the test-time selection
    rule keeps them). The anchor at `anchor_rank` (0-based) of each topic's
    frequency order is renamed to the shared pseudoword.
    """
    rng_ = np.random.default_rng(seed)
    probs = _zipf_probs(vocab_per_topic, zipf_a)
    topic_words = []
    for t in range(2):
        words = [f"t{t}w{i:03d}" for i in range(vocab_per_topic)]
        words[anchor_rank] = pseudoword
        topic_words.append(words)

    lo, hi = sentence_len
    lines = []
    produced = 0
    while produced < n_tokens:
        topic = int(rng_.integers(2))
        length = int(rng_.integers(lo, hi + 1))
        idx = rng_.choice(vocab_per_topic, size=length, p=probs)
        words = [topic_words[topic][j] for j in idx]
        lines.append(" ".join(words))
        produced += length

    instances = []
    gold_labels = []
    for sense in range(2):
        for i in range(n_test_per_sense):
            length = int(rng_.integers(lo, hi + 1))
            idx = rng_.choice(vocab_per_topic, size=length, p=probs)
            tokens = [topic_words[sense][j] for j in idx if topic_words[sense][j] != pseudoword]
            pos = int(rng_.integers(0, len(tokens) + 1))
            tokens.insert(pos, pseudoword)
            iid = f"{pseudoword}.n.{sense}-{i}"
            instances.append(Instance(iid, pseudoword, "n", tuple(tokens), pos))
            gold_labels.append(f"{pseudoword}.n.gold{sense}")
    gold = Clustering.from_sequences([inst.instance_id for inst in instances], gold_labels)
    return PseudowordBenchmark(lines, pseudoword, instances, gold, tuple(topic_words))


def best_mapping_accuracy(gold: Clustering, pred: Clustering) -> float:
    """Accuracy after mapping each predicted cluster to its majority gold sense."""
    from collections import Counter

    per_cluster: dict[str, Counter] = {}
    for i in gold.universe:
        per_cluster.setdefault(pred.labels[i], Counter())[gold.labels[i]] += 1
    correct = sum(counter.most_common(1)[0][1] for counter in per_cluster.values())
    return correct / len(gold.universe)
