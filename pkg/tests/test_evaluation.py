import itertools
import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from sensewsi.evaluation import (
    Clustering,
    SplitPlan,
    UniverseMismatchError,
    _majority_mapping,
    avg_clusters,
    evaluate,
    make_splits,
    paired_fscore,
    supervised_eval,
    v_measure,
)


def clustering(labels, prefix="i"):
    ids = [f"{prefix}{j}" for j in range(len(labels))]
    return Clustering.from_sequences(ids, labels)


# -- independent oracles -------------------------------------------------------


def vm_oracle(gold, pred):
    """Direct entropy computation over explicit probability tables."""
    n = len(gold.universe)
    pairs = [(gold.labels[i], pred.labels[i]) for i in gold.universe]

    def entropy(counts):
        return -sum(c / n * math.log(c / n) for c in counts.values())

    h_gold = entropy(Counter(g for g, _ in pairs))
    h_pred = entropy(Counter(p for _, p in pairs))
    joint = Counter(pairs)
    pred_totals = Counter(p for _, p in pairs)
    gold_totals = Counter(g for g, _ in pairs)
    h_g_given_p = -sum(c / n * math.log(c / pred_totals[p]) for (g, p), c in joint.items())
    h_p_given_g = -sum(c / n * math.log(c / gold_totals[g]) for (g, p), c in joint.items())
    h = 1.0 if h_gold == 0 else 1 - h_g_given_p / h_gold
    c = 1.0 if h_pred == 0 else 1 - h_p_given_g / h_pred
    return (0.0 if h + c == 0 else 2 * h * c / (h + c)), h, c


def pf_oracle(gold, pred):
    """Exhaustive pair enumeration."""
    def pair_set(clust):
        out = set()
        for a, b in itertools.combinations(clust.universe, 2):
            if clust.labels[a] == clust.labels[b]:
                out.add(frozenset((a, b)))
        return out

    fg, fp = pair_set(gold), pair_set(pred)
    p = len(fp & fg) / len(fp) if fp else 0.0
    r = len(fp & fg) / len(fg) if fg else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def sr_oracle(gold, pred, splits):
    """Hand-walked majority mapping per split."""
    recalls = []
    fss = []
    for mapping_ids, test_ids in splits.splits:
        global_counts = Counter(gold.labels[i] for i in mapping_ids)
        votes = {}
        for i in mapping_ids:
            votes.setdefault(pred.labels[i], Counter())[gold.labels[i]] += 1

        def pick(counter):
            best = None
            for sense in counter:
                key = (counter[sense], global_counts[sense])
                if best is None:
                    best = sense
                else:
                    bkey = (counter[best], global_counts[best])
                    if key > bkey or (key == bkey and sense < best):
                        best = sense
            return best

        mapping = {c: pick(v) for c, v in votes.items()}
        fallback = pick(global_counts)
        correct = sum(
            1 for i in test_ids if mapping.get(pred.labels[i], fallback) == gold.labels[i]
        )
        recalls.append(correct / len(test_ids))
        # micro F over gold senses
        tp = Counter()
        fp = Counter()
        fn = Counter()
        for i in test_ids:
            m = mapping.get(pred.labels[i], fallback)
            g = gold.labels[i]
            if m == g:
                tp[g] += 1
            else:
                fp[m] += 1
                fn[g] += 1
        tps, fps, fns = sum(tp.values()), sum(fp.values()), sum(fn.values())
        mp = tps / (tps + fps) if tps + fps else 0.0
        mr = tps / (tps + fns) if tps + fns else 0.0
        fss.append(2 * mp * mr / (mp + mr) if mp + mr else 0.0)
    return float(np.mean(recalls)), float(np.mean(fss))


def random_clustering_pair(gen, max_n=30, max_labels=6):
    n = int(gen.integers(2, max_n + 1))
    ids = [f"x{j}" for j in range(n)]
    gold = [f"g{gen.integers(0, max_labels)}" for _ in range(n)]
    pred = [f"p{gen.integers(0, max_labels)}" for _ in range(n)]
    return Clustering.from_sequences(ids, gold), Clustering.from_sequences(ids, pred)


class TestClustering:
    def test_unlabeled_id_rejected(self):
        with pytest.raises(ValueError, match="unlabeled"):
            Clustering(("a", "b"), {"a": "x"})

    def test_duplicate_universe_rejected(self):
        with pytest.raises(ValueError, match="duplicate"):
            Clustering(("a", "a"), {"a": "x"})

    def test_universe_mismatch_lists_discrepancies(self):
        g = clustering(["a", "a"])
        p = Clustering.from_sequences(["i0", "zz"], ["a", "a"])
        with pytest.raises(UniverseMismatchError, match="zz"):
            v_measure(g, p)


class TestVMeasure:
    def test_relabeling_gives_one(self):
        g = clustering(["a", "a", "b", "b", "c"])
        p = clustering(["x", "x", "y", "y", "z"])
        vm, h, c = v_measure(g, p)
        assert vm == h == c == 1.0

    def test_single_cluster_degenerate(self):
        g = clustering(["a", "a", "b", "b"])
        p = clustering(["same"] * 4)
        vm, h, c = v_measure(g, p)
        assert h == 0.0 and vm == 0.0

    def test_derived_example(self):
        g = clustering(["0", "0", "1", "1"])
        p = clustering(["0", "0", "0", "1"])
        vm, h, c = v_measure(g, p)
        assert h == pytest.approx(0.3113, abs=1e-4)
        assert c == pytest.approx(0.3837, abs=1e-4)
        assert vm == pytest.approx(0.3437, abs=1e-4)

    def test_trivial_gold_single_class(self):
        g = clustering(["a", "a", "a"])
        p = clustering(["x", "y", "z"])
        vm, h, c = v_measure(g, p)
        assert h == 1.0  # H(gold) = 0 convention

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**9))
    def test_matches_entropy_oracle(self, seed):
        gold, pred = random_clustering_pair(np.random.default_rng(seed))
        assert v_measure(gold, pred) == pytest.approx(vm_oracle(gold, pred), abs=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 10**9))
    def test_relabeling_invariance(self, seed):
        gold, pred = random_clustering_pair(np.random.default_rng(seed))
        remap = {l: f"z{j}" for j, l in enumerate(sorted({pred.labels[i] for i in pred.universe}))}
        pred2 = Clustering(pred.universe, {i: remap[pred.labels[i]] for i in pred.universe})
        assert v_measure(gold, pred2) == pytest.approx(v_measure(gold, pred), abs=1e-12)


class TestPairedFscore:
    def test_identity(self):
        g = clustering(["a", "a", "b"])
        assert paired_fscore(g, g) == (1.0, 1.0, 1.0)

    def test_derived_example(self):
        g = clustering(["s1", "s1", "s2"])   # gold pairs: {(0,1)}
        p = clustering(["c", "c", "c"])      # pred pairs: all 3
        precision, recall, f = paired_fscore(g, p)
        assert precision == pytest.approx(1 / 3)
        assert recall == 1.0
        assert f == pytest.approx(0.5)

    def test_all_singletons_zero_by_convention(self):
        g = clustering(["a", "a", "b"])
        p = clustering(["1", "2", "3"])
        precision, recall, f = paired_fscore(g, p)
        assert precision == 0.0 and f == 0.0

    @settings(max_examples=60, deadline=None)
    @given(st.integers(0, 10**9))
    def test_matches_pair_enumeration_oracle(self, seed):
        gold, pred = random_clustering_pair(np.random.default_rng(seed))
        got = paired_fscore(gold, pred)
        assert got == pytest.approx(pf_oracle(gold, pred), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**9))
    def test_bounds_and_f_below_max(self, seed):
        gold, pred = random_clustering_pair(np.random.default_rng(seed))
        p, r, f = paired_fscore(gold, pred)
        assert 0.0 <= p <= 1.0 and 0.0 <= r <= 1.0
        assert f <= max(p, r) + 1e-12


class TestMakeSplits:
    def test_eighty_twenty_arithmetic(self):
        plan = make_splits([f"i{j}" for j in range(10)], n_splits=3, fraction=0.8, seed=1)
        for mapping, test in plan.splits:
            assert len(mapping) == 8 and len(test) == 2

    def test_same_seed_identical(self):
        u = [f"i{j}" for j in range(12)]
        assert make_splits(u, seed=7).splits == make_splits(u, seed=7).splits

    def test_undersized_universe_rejected(self):
        with pytest.raises(ValueError):
            make_splits(["a", "b", "c"], n_splits=2)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(5, 60), st.integers(0, 10**6))
    def test_partition_invariants(self, n, seed):
        u = [f"i{j}" for j in range(n)]
        plan = make_splits(u, n_splits=4, fraction=0.8, seed=seed)
        for mapping, test in plan.splits:
            assert set(mapping) | set(test) == set(u)
            assert not (set(mapping) & set(test))
            assert mapping and test

    def test_overlapping_plan_rejected(self):
        with pytest.raises(ValueError):
            SplitPlan([(("a", "b"), ("b", "c"))], 0.8, 0)


class TestSupervisedEval:
    def test_perfect_prediction(self):
        g = clustering(["a", "b", "a", "b", "a", "b", "a", "b"])
        p = clustering(["x", "y", "x", "y", "x", "y", "x", "y"])
        sr, fs = supervised_eval(g, p, make_splits(g.universe, 5, 0.8, 3))
        assert sr == 1.0 and fs == 1.0

    def test_hand_walked_mapping_example(self):
        # mapping set: cluster0 sees gold {A:2, B:1} -> A; cluster1 sees {B:2} -> B
        # test set: (cluster0, A) correct, (cluster1, A) wrong -> SR = 0.5
        ids = [f"i{j}" for j in range(7)]
        gold = Clustering.from_sequences(ids, ["A", "A", "B", "B", "B", "A", "A"])
        pred = Clustering.from_sequences(ids, ["c0", "c0", "c0", "c1", "c1", "c0", "c1"])
        plan = SplitPlan([(tuple(ids[:5]), tuple(ids[5:]))], 0.8, 0)
        sr, fs = supervised_eval(gold, pred, plan)
        assert sr == 0.5

    def test_single_cluster_majority_share(self):
        # one cluster, 50/50 gold: recall = majority share of the test set
        ids = [f"i{j}" for j in range(8)]
        gold = Clustering.from_sequences(ids, ["A", "B"] * 4)
        pred = Clustering.from_sequences(ids, ["c"] * 8)
        plan = SplitPlan([(tuple(ids[:4]), tuple(ids[4:]))], 0.5, 0)
        sr, _ = supervised_eval(gold, pred, plan)
        # mapping set AABB -> tie -> global tie -> lexicographic "A"
        assert sr == 0.5

    def test_unseen_cluster_maps_to_most_frequent(self):
        ids = [f"i{j}" for j in range(6)]
        gold = Clustering.from_sequences(ids, ["A", "A", "B", "A", "A", "B"])
        pred = Clustering.from_sequences(ids, ["c0", "c0", "c0", "c0", "c0", "cNEW"])
        plan = SplitPlan([(tuple(ids[:5]), tuple(ids[5:]))], 0.8, 0)
        sr, _ = supervised_eval(gold, pred, plan)
        # cNEW unseen -> mapped to "A" (most frequent), gold is B -> wrong
        assert sr == 0.0

    def test_empty_test_split_rejected(self):
        g = clustering(["a", "b", "a", "b", "a"])
        plan = SplitPlan([(tuple(g.universe), ())], 1.0, 0)
        with pytest.raises(ValueError, match="empty test"):
            supervised_eval(g, g, plan)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 10**9))
    def test_matches_hand_walked_oracle(self, seed):
        gen = np.random.default_rng(seed)
        gold, pred = random_clustering_pair(gen, max_n=25)
        if len(gold.universe) < 5:
            return
        plan = make_splits(gold.universe, n_splits=3, fraction=0.8, seed=seed)
        assert supervised_eval(gold, pred, plan) == pytest.approx(
            sr_oracle(gold, pred, plan), abs=1e-12
        )

    def test_full_universe_mapping_degenerates_to_training_accuracy(self):
        # the fraction -> 1.0 limit: majority mapping scored on its own set
        gen = np.random.default_rng(42)
        gold, pred = random_clustering_pair(gen, max_n=20)
        ids = gold.universe
        mapping, fallback = _majority_mapping(gold, pred, ids)
        accuracy = sum(
            1 for i in ids if mapping.get(pred.labels[i], fallback) == gold.labels[i]
        ) / len(ids)
        # oracle: best single-sense assignment per cluster
        per_cluster = {}
        for i in ids:
            per_cluster.setdefault(pred.labels[i], Counter())[gold.labels[i]] += 1
        best = sum(c.most_common(1)[0][1] for c in per_cluster.values()) / len(ids)
        assert accuracy == pytest.approx(best)


class TestAvgClusters:
    def test_floor(self):
        m = {"t1": clustering(["x", "x"]), "t2": clustering(["y"])}
        assert avg_clusters(m) == 1.0

    def test_mean(self):
        m = {
            "t1": clustering(["a", "b", "a"]),
            "t2": clustering(["a", "b", "c", "d"]),
        }
        assert avg_clusters(m) == 3.0

    def test_recount_oracle(self):
        gen = np.random.default_rng(0)
        m = {}
        expected = []
        for t in range(100):
            labels = [f"s{gen.integers(0, 6)}" for _ in range(int(gen.integers(1, 15)))]
            m[f"t{t}"] = clustering(labels, prefix=f"t{t}-")
            expected.append(len(set(labels)))
        assert avg_clusters(m) == pytest.approx(float(np.mean(expected)))

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            avg_clusters({})


class TestEvaluateAggregation:
    def _keyed(self, per_target):
        ids, gold, pred, targets = [], [], [], {}
        for t, (g_labels, p_labels) in per_target.items():
            for j, (g, p) in enumerate(zip(g_labels, p_labels)):
                iid = f"{t}.{j}"
                ids.append(iid)
                gold.append(f"{t}.{g}")
                pred.append(f"{t}.{p}")
                targets[iid] = t
        return (
            Clustering.from_sequences(ids, gold),
            Clustering.from_sequences(ids, pred),
            targets,
        )

    def test_per_target_unweighted_average(self):
        gold, pred, targets = self._keyed({
            "dog.n": (["a"] * 4 + ["b"] * 4, ["x"] * 4 + ["y"] * 4),  # VM 1
            "run.v": (["a", "a", "b", "b"] * 2, ["x"] * 8),           # VM 0
        })
        reports = evaluate(gold, pred, targets, n_splits=2, seed=0)
        assert reports["all"].vm == pytest.approx(0.5)
        assert reports["noun"].vm == pytest.approx(1.0)
        assert reports["verb"].vm == pytest.approx(0.0)
        assert reports["all"].ci == pytest.approx(1.5)
        assert reports["all"].targets == 2 and reports["all"].instances == 16

    def test_weighted_flag_changes_average(self):
        gold, pred, targets = self._keyed({
            "dog.n": (["a"] * 8 + ["b"] * 8, ["x"] * 8 + ["y"] * 8),  # 16 instances, VM 1
            "run.v": (["a", "a", "b", "b"], ["x", "x", "x", "x"]),    # 4 instances, VM 0
        })
        plain = evaluate(gold, pred, targets, n_splits=2, seed=0)
        weighted = evaluate(gold, pred, targets, n_splits=2, seed=0, weighted=True)
        assert plain["all"].vm == pytest.approx(0.5)
        assert weighted["all"].vm == pytest.approx(0.8)
        # four verb instances cannot support an 80-20 plan
        assert math.isnan(plain["verb"].sr) and math.isnan(plain["verb"].fs)

    def test_identity_prediction_scores_perfect(self):
        gold, pred, targets = self._keyed({
            "dog.n": (["a", "a", "b", "b", "a"], ["a", "a", "b", "b", "a"]),
        })
        reports = evaluate(gold, gold, targets, n_splits=3, seed=1)
        r = reports["all"]
        assert r.vm == 1.0 and r.pf_f == 1.0 and r.sr == 1.0 and r.fs == 1.0
