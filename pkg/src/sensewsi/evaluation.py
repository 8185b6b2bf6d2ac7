"""Clustering evaluation: V-measure, paired F-score, 80-20 supervised recall.

All metrics treat labels as opaque strings and are invariant under bijective
relabeling. Natural-log entropies throughout (the base cancels in the
homogeneity/completeness ratios).
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


class UniverseMismatchError(ValueError):
    """Two clusterings cover different instance sets."""

    def __init__(self, only_gold: list[str], only_pred: list[str]):
        self.only_gold = only_gold
        self.only_pred = only_pred
        parts = []
        if only_gold:
            parts.append(f"only in gold: {', '.join(only_gold[:10])}")
        if only_pred:
            parts.append(f"only in predicted: {', '.join(only_pred[:10])}")
        super().__init__("clusterings cover different instances; " + "; ".join(parts))


@dataclass
class Clustering:
    """instance-id -> label over an ordered universe."""

    universe: tuple[str, ...]
    labels: dict[str, str]

    def __post_init__(self):
        self.universe = tuple(self.universe)
        if len(set(self.universe)) != len(self.universe):
            raise ValueError("universe contains duplicate instance ids")
        missing = [i for i in self.universe if i not in self.labels]
        if missing:
            raise ValueError(f"{len(missing)} universe ids unlabeled, e.g. {missing[:5]}")
        extra = set(self.labels) - set(self.universe)
        if extra:
            raise ValueError(f"{len(extra)} labeled ids outside the universe")

    @classmethod
    def from_sequences(cls, ids: Sequence[str], labels: Sequence) -> "Clustering":
        if len(ids) != len(labels):
            raise ValueError("ids and labels differ in length")
        return cls(tuple(ids), {i: str(l) for i, l in zip(ids, labels)})

    def __len__(self) -> int:
        return len(self.universe)

    def n_labels(self) -> int:
        return len(set(self.labels[i] for i in self.universe))

    def restrict(self, ids: Sequence[str]) -> "Clustering":
        return Clustering(tuple(ids), {i: self.labels[i] for i in ids})


def _check_universe(gold: Clustering, pred: Clustering) -> None:
    g, p = set(gold.universe), set(pred.universe)
    if g != p:
        raise UniverseMismatchError(sorted(g - p), sorted(p - g))


def v_measure(gold: Clustering, pred: Clustering) -> tuple[float, float, float]:
    """(VM, homogeneity, completeness) from conditional entropies.

    h = 1 - H(gold|pred)/H(gold)  (1 when H(gold) = 0)
    c = 1 - H(pred|gold)/H(pred)  (1 when H(pred) = 0)
    VM = 2hc/(h+c), or 0 when h + c = 0.
    """
    _check_universe(gold, pred)
    n = len(gold.universe)
    joint = Counter((gold.labels[i], pred.labels[i]) for i in gold.universe)
    gold_counts = Counter(gold.labels[i] for i in gold.universe)
    pred_counts = Counter(pred.labels[i] for i in gold.universe)
    h_gold = -sum(c / n * math.log(c / n) for c in gold_counts.values())
    h_pred = -sum(c / n * math.log(c / n) for c in pred_counts.values())
    h_gold_given_pred = -sum(
        c / n * math.log(c / pred_counts[pk]) for (gk, pk), c in joint.items()
    )
    h_pred_given_gold = -sum(
        c / n * math.log(c / gold_counts[gk]) for (gk, pk), c in joint.items()
    )
    h = 1.0 if h_gold == 0.0 else 1.0 - h_gold_given_pred / h_gold
    c = 1.0 if h_pred == 0.0 else 1.0 - h_pred_given_gold / h_pred
    vm = 0.0 if h + c == 0.0 else 2.0 * h * c / (h + c)
    return vm, h, c


def paired_fscore(gold: Clustering, pred: Clustering) -> tuple[float, float, float]:
    """(precision, recall, F) over unordered same-label instance pairs.

    Precision is 0 when the predicted pair set is empty (all singletons),
    recall 0 when the gold pair set is empty, F is 0 when both are 0.
    """
    _check_universe(gold, pred)

    def n_pairs(counts: Counter) -> int:
        return sum(c * (c - 1) // 2 for c in counts.values())

    gold_pairs = n_pairs(Counter(gold.labels[i] for i in gold.universe))
    pred_pairs = n_pairs(Counter(pred.labels[i] for i in gold.universe))
    both = n_pairs(Counter((gold.labels[i], pred.labels[i]) for i in gold.universe))
    precision = both / pred_pairs if pred_pairs else 0.0
    recall = both / gold_pairs if gold_pairs else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f


@dataclass
class SplitPlan:
    """Mapping/test partitions of a universe for supervised evaluation."""

    splits: list[tuple[tuple[str, ...], tuple[str, ...]]]
    fraction: float
    seed: int

    def __post_init__(self):
        for mapping, test in self.splits:
            m, t = set(mapping), set(test)
            if m & t:
                raise ValueError("mapping and test sets overlap")


def make_splits(
    universe: Sequence[str], n_splits: int = 5, fraction: float = 0.8, seed: int = 0
) -> SplitPlan:
    """n_splits seeded shuffles; first `fraction` of each is the mapping set."""
    ids = list(universe)
    n = len(ids)
    if n < 5:
        raise ValueError(f"supervised splits need >= 5 instances, got {n}")
    cut = int(n * fraction)
    if cut < 1 or cut >= n:
        raise ValueError(f"fraction {fraction} leaves an empty mapping or test set")
    rng_ = np.random.default_rng(seed)
    splits = []
    for _ in range(n_splits):
        perm = rng_.permutation(n)
        splits.append(
            (tuple(ids[j] for j in perm[:cut]), tuple(ids[j] for j in perm[cut:]))
        )
    return SplitPlan(splits, fraction, seed)


def _majority_mapping(
    gold: Clustering, pred: Clustering, mapping_ids: Sequence[str]
) -> tuple[dict[str, str], str]:
    """cluster -> gold sense by majority over the mapping set.

    Ties go to the gold sense more frequent over the whole mapping set, then
    lexicographic. Also returns the mapping set's most frequent gold sense
    (same tie rule) for clusters unseen at mapping time.
    """
    global_counts = Counter(gold.labels[i] for i in mapping_ids)
    per_cluster: dict[str, Counter] = {}
    for i in mapping_ids:
        per_cluster.setdefault(pred.labels[i], Counter())[gold.labels[i]] += 1

    def best(counter: Counter) -> str:
        return min(
            counter,
            key=lambda s: (-counter[s], -global_counts[s], s),
        )

    mapping = {cluster: best(counts) for cluster, counts in per_cluster.items()}
    return mapping, best(global_counts)


def supervised_eval(
    gold: Clustering, pred: Clustering, splits: SplitPlan
) -> tuple[float, float]:
    """(mean recall, mean micro-F) of majority-mapped predictions.

    Per split: map clusters to gold senses by majority vote over the mapping
    set, label each test instance through the mapping (unseen clusters get
    the mapping set's most frequent sense), then score the test set.
    """
    _check_universe(gold, pred)
    recalls, fscores = [], []
    for mapping_ids, test_ids in splits.splits:
        if not test_ids:
            raise ValueError("a split has an empty test set")
        if not mapping_ids:
            raise ValueError("a split has an empty mapping set")
        mapping, fallback = _majority_mapping(gold, pred, mapping_ids)
        tp: Counter = Counter()
        fp: Counter = Counter()
        fn: Counter = Counter()
        correct = 0
        for i in test_ids:
            mapped = mapping.get(pred.labels[i], fallback)
            truth = gold.labels[i]
            if mapped == truth:
                correct += 1
                tp[truth] += 1
            else:
                fp[mapped] += 1
                fn[truth] += 1
        recalls.append(correct / len(test_ids))
        senses = set(tp) | set(fp) | set(fn)
        tp_sum = sum(tp[s] for s in senses)
        fp_sum = sum(fp[s] for s in senses)
        fn_sum = sum(fn[s] for s in senses)
        micro_p = tp_sum / (tp_sum + fp_sum) if tp_sum + fp_sum else 0.0
        micro_r = tp_sum / (tp_sum + fn_sum) if tp_sum + fn_sum else 0.0
        denominator = micro_p + micro_r
        fscores.append(2 * micro_p * micro_r / denominator if denominator else 0.0)
    return float(np.mean(recalls)), float(np.mean(fscores))


def avg_clusters(pred_by_target: Mapping[str, Clustering]) -> float:
    """Unweighted mean over targets of the number of labels actually used."""
    if not pred_by_target:
        raise ValueError("no targets to average over")
    return float(np.mean([c.n_labels() for c in pred_by_target.values()]))


# -- task-style aggregation ---------------------------------------------------


@dataclass
class MetricReport:
    vm: float
    homogeneity: float
    completeness: float
    pf_precision: float
    pf_recall: float
    pf_f: float
    sr: float
    fs: float
    ci: float
    targets: int
    instances: int

    def to_dict(self) -> dict:
        return {
            "vm": self.vm,
            "homogeneity": self.homogeneity,
            "completeness": self.completeness,
            "pf_precision": self.pf_precision,
            "pf_recall": self.pf_recall,
            "pf_f": self.pf_f,
            "sr": self.sr,
            "fs": self.fs,
            "ci": self.ci,
            "targets": self.targets,
            "instances": self.instances,
        }


def _pos_of(target: str) -> str:
    return target.rsplit(".", 1)[1] if "." in target else ""


def evaluate(
    gold: Clustering,
    pred: Clustering,
    targets: Mapping[str, str],
    n_splits: int = 5,
    fraction: float = 0.8,
    seed: int = 0,
    weighted: bool = False,
) -> dict[str, MetricReport]:
    """All/Noun/Verb metric rows over per-target clusterings.

    VM and PF are computed per target and averaged (unweighted by default,
    instance-weighted with `weighted`); SR/FS pool all instances of the
    group through one split plan; #CI is the mean label count per target.
    """
    _check_universe(gold, pred)
    by_target: dict[str, list[str]] = {}
    for i in gold.universe:
        by_target.setdefault(targets[i], []).append(i)

    groups = {"all": sorted(by_target)}
    groups["noun"] = [t for t in groups["all"] if _pos_of(t) == "n"]
    groups["verb"] = [t for t in groups["all"] if _pos_of(t) == "v"]

    out = {}
    for name, group_targets in groups.items():
        if not group_targets:
            continue
        vms, pfs, weights = [], [], []
        preds_by_target = {}
        for t in group_targets:
            ids = by_target[t]
            g = gold.restrict(ids)
            p = pred.restrict(ids)
            vms.append(v_measure(g, p))
            pfs.append(paired_fscore(g, p))
            weights.append(len(ids))
            preds_by_target[t] = p
        w = np.asarray(weights, dtype=np.float64)
        if not weighted:
            w = np.ones_like(w)
        w = w / w.sum()
        vm_mean = tuple(float(np.dot(w, [v[j] for v in vms])) for j in range(3))
        pf_mean = tuple(float(np.dot(w, [p[j] for p in pfs])) for j in range(3))
        pooled_ids = [i for t in group_targets for i in by_target[t]]
        g_pool = gold.restrict(pooled_ids)
        p_pool = pred.restrict(pooled_ids)
        if len(pooled_ids) >= 5:
            sr, fs = supervised_eval(
                g_pool, p_pool, make_splits(pooled_ids, n_splits, fraction, seed)
            )
        else:
            # too few instances for the split plan
            sr, fs = float("nan"), float("nan")
        out[name] = MetricReport(
            vm=vm_mean[0],
            homogeneity=vm_mean[1],
            completeness=vm_mean[2],
            pf_precision=pf_mean[0],
            pf_recall=pf_mean[1],
            pf_f=pf_mean[2],
            sr=sr,
            fs=fs,
            ci=avg_clusters(preds_by_target),
            targets=len(group_targets),
            instances=len(pooled_ids),
        )
    return out
