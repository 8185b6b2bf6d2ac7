import dataclasses
import json

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from conftest import random_corpus_lines
from sensewsi import rng
from sensewsi.corpus import EncodedCorpus, Window, build_vocab
from sensewsi.induction import (
    ConfigError,
    SenseLabel,
    TrainingConfig,
    TrainLog,
    context_vec_train,
    crp_choose,
    crp_pretrain_init,
    sense_label_crp,
    sense_label_fix,
    train,
    train_word_embeddings,
)
from sensewsi.vectors import SenseTable, WordTable


def make_table(vectors, counts=None, multi=None, cap=10):
    """SenseTable over one word whose senses sit at the given vectors."""
    vocab = build_vocab(["w", "x"], min_count=1)
    vectors = np.asarray(vectors, dtype=np.float32)
    t = SenseTable.crp_init(vocab, np.zeros((2, vectors.shape[1]), np.float32),
                            multi if multi is not None else [0, 1], cap=cap)
    wid = vocab.id_of("w")
    base = int(t.offsets[wid])
    t.n_senses[wid] = len(vectors)
    for k, v in enumerate(vectors):
        t.emb[base + k] = v
        t.assign[base + k] = v
        t.counts[base + k] = 0 if counts is None else counts[k]
    return t, wid


class TestConfig:
    def test_defaults_follow_reported_setup(self):
        cfg = TrainingConfig()
        assert cfg.dim == 300 and cfg.k == 3 and cfg.multi_sense_size == 6000
        cfg.validate()

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"k": 0},
            {"gamma": -0.1},
            {"epochs": 0},
            {"mode": "bogus"},
            {"lr": 0.0},
            {"window": 0},
            {"similarity": "euclid"},
            {"subsample": -1e-4},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ConfigError):
            TrainingConfig(**kwargs).validate()

    def test_rejected_before_any_work(self, small_corpus):
        with pytest.raises(ConfigError):
            train(small_corpus, TrainingConfig(k=0, min_count=1))


class TestContextVec:
    def test_singleton(self):
        vocab = build_vocab(["a", "b"], min_count=1)
        wt = WordTable(np.array([[1, 0], [0, 1]], np.float32), vocab)
        cv = context_vec_train(Window(0, (1,), 0, 1), wt)
        assert np.array_equal(cv.values, [0.0, 1.0]) and cv.support == 1

    def test_mean_of_two(self):
        vocab = build_vocab(["a", "b"], min_count=1)
        wt = WordTable(np.array([[1, 0], [0, 1]], np.float32), vocab)
        cv = context_vec_train(Window(0, (0, 1), 0, 1), wt)
        assert np.allclose(cv.values, [0.5, 0.5])

    def test_empty_context_zero_support(self):
        vocab = build_vocab(["a", "b"], min_count=1)
        wt = WordTable.random_init(vocab, 4, 0)
        cv = context_vec_train(Window(0, (), 0, 1), wt)
        assert cv.support == 0 and np.all(cv.values == 0.0)

    def test_six_word_context_matches_second_pass_oracle(self):
        gen = np.random.default_rng(8)
        vocab = build_vocab([f"t{i}" for i in range(8)], min_count=1)
        wt = WordTable(gen.normal(size=(8, 10)).astype(np.float32), vocab)
        ctx = (1, 5, 2, 2, 7, 0)
        cv = context_vec_train(Window(3, ctx, 0, 3), wt)
        oracle = sum(wt.matrix[i].astype(np.float64) for i in ctx) / len(ctx)
        assert np.array_equal(cv.values, oracle.astype(np.float32))


class TestSenseLabelFix:
    def test_dominant_similarity(self):
        t, wid = make_table([[1, 0], [0, 1]])
        assert sense_label_fix(wid, np.array([0.9, 0.1], np.float32), t).k == 0
        assert sense_label_fix(wid, np.array([0.1, 0.9], np.float32), t).k == 1

    def test_single_sense_forced(self):
        t, wid = make_table([[1, 0]])
        assert sense_label_fix(wid, np.array([-5.0, 2.0], np.float32), t).k == 0

    def test_exact_tie_lowest_index(self):
        t, wid = make_table([[1, 1], [1, 1], [1, 1]])
        assert sense_label_fix(wid, np.array([3.0, 3.0], np.float32), t).k == 0

    def test_scale_invariance_of_argmax(self):
        gen = np.random.default_rng(4)
        t, wid = make_table(gen.normal(size=(4, 6)))
        for _ in range(25):
            v = gen.normal(size=6).astype(np.float32)
            k = sense_label_fix(wid, v, t).k
            for lam in (0.5, 3.0, 1000.0):
                assert sense_label_fix(wid, (lam * v).astype(np.float32), t).k == k

    def test_embedding_switch(self):
        t, wid = make_table([[1, 0], [0, 1]])
        t.emb[int(t.offsets[wid])] = [0, 1]
        t.emb[int(t.offsets[wid]) + 1] = [1, 0]
        v = np.array([1.0, 0.0], np.float32)
        assert sense_label_fix(wid, v, t, use="cluster").k == 0
        assert sense_label_fix(wid, v, t, use="embedding").k == 1


class _ConstStream:
    def __init__(self, u):
        self.u = u

    def random(self):
        return self.u


class TestSenseLabelCrp:
    def test_empty_senses_forced_new(self):
        t, wid = make_table(np.zeros((1, 2)))
        t.n_senses[wid] = 0
        label = sense_label_crp(wid, np.array([1.0, 0.0], np.float32), t, 0.5, _ConstStream(0.99))
        assert label.is_new and label.k == 0

    def test_empty_senses_gamma_zero_error(self):
        t, wid = make_table(np.zeros((1, 2)))
        t.n_senses[wid] = 0
        with pytest.raises(ValueError, match="no valid outcome"):
            sense_label_crp(wid, np.array([1.0, 0.0], np.float32), t, 0.0, _ConstStream(0.5))

    def test_gamma_zero_single_sense_forced(self):
        t, wid = make_table([[1, 0]])  # count 0 -> total weight 0
        label = sense_label_crp(wid, np.array([1.0, 0.0], np.float32), t, 0.0, _ConstStream(0.5))
        assert label.k == 0 and not label.is_new

    def test_distribution_three_to_one_to_gamma(self):
        # counts (3, 1), equal similarities 1, gamma = 1 -> (3/5, 1/5, 1/5)
        t, wid = make_table([[1.0, 0.0], [1.0, 0.0]], counts=[3, 1])
        v = np.array([1.0, 0.0], np.float32)
        stream = rng.CounterStream(77, rng.CRP)
        tallies = [0, 0, 0]
        n = 100_000
        for _ in range(n):
            label = sense_label_crp(wid, v, t, gamma=1.0, rng_like=stream)
            tallies[label.k] += 1
        assert tallies[0] / n == pytest.approx(0.6, abs=0.01)
        assert tallies[1] / n == pytest.approx(0.2, abs=0.01)
        assert tallies[2] / n == pytest.approx(0.2, abs=0.01)

    def test_cap_blocks_new_sense(self):
        t, wid = make_table([[1.0, 0.0], [1.0, 0.0]], counts=[1, 1], cap=2)
        v = np.array([1.0, 0.0], np.float32)
        for u in (0.01, 0.5, 0.999999):
            label = sense_label_crp(wid, v, t, gamma=1e9, rng_like=_ConstStream(u))
            assert not label.is_new

    def test_negative_similarity_floored(self):
        # anti-aligned sense still has weight n * eps_sim, not a negative one
        t, wid = make_table([[-1.0, 0.0]], counts=[4])
        v = np.array([1.0, 0.0], np.float32)
        label = sense_label_crp(wid, v, t, gamma=0.0, rng_like=_ConstStream(0.999))
        assert label.k == 0

    def test_crp_choose_shared_kernel(self):
        assert crp_choose([3, 1], [1.0, 1.0], 1.0, True, 0.59) == 0
        assert crp_choose([3, 1], [1.0, 1.0], 1.0, True, 0.79) == 1
        assert crp_choose([3, 1], [1.0, 1.0], 1.0, True, 0.81) == 2
        assert crp_choose([], [], 0.5, True, None) == 0
        with pytest.raises(ValueError):
            crp_choose([], [], 0.0, False, None)


class TestCrpPretrainInit:
    def test_copies_word_vectors(self):
        vocab = build_vocab(["a", "b", "c"], min_count=1)
        wt = WordTable(np.arange(6, dtype=np.float32).reshape(3, 2), vocab)
        t = crp_pretrain_init(wt, multi_sense_ids=[0], cap=4)
        for wid in range(3):
            assert t.n_senses_of(wid) == 1
            assert np.array_equal(t.embedding(wid, 0), wt.matrix[wid])
            assert np.array_equal(t.assign_centroid(wid, 0), wt.matrix[wid])
            assert t.count(wid, 0) == 0

    def test_word_outside_multi_sense_set_never_grows(self):
        vocab = build_vocab(["a", "b"], min_count=1)
        wt = WordTable(np.ones((2, 2), np.float32), vocab)
        t = crp_pretrain_init(wt, multi_sense_ids=[0], cap=5)
        assert t.capacity(vocab.id_of("b")) == 1
        with pytest.raises(ValueError):
            t.create_sense(vocab.id_of("b"), np.zeros(2, np.float32))

    def test_missing_vectors_listed(self):
        vocab_small = build_vocab(["a"], min_count=1)
        vocab_big = build_vocab(["a", "b", "c"], min_count=1)
        wt = WordTable(np.ones((1, 2), np.float32), vocab_small)
        with pytest.raises(ValueError, match="b, c"):
            crp_pretrain_init(wt, multi_sense_ids=[], cap=2, target_vocab=vocab_big)


def _train_both(enc, cfg):
    fast = train(enc, dataclasses.replace(cfg), engine="fast")
    ref = train(enc, dataclasses.replace(cfg), engine="reference")
    return fast, ref


class TestEngineEquality:
    @pytest.mark.parametrize("mode,extra", [
        ("fixed", {}),
        ("fixed", {"k": 1}),
        ("crp", {}),
        ("crp", {"gamma": 3.0}),
        ("crp", {"gamma": 0.0}),
        ("fixed", {"similarity": "dot"}),
        ("fixed", {"assign_vector": "embedding"}),
    ])
    def test_fast_equals_reference_bitwise(self, mode, extra):
        lines = random_corpus_lines(n_words=25, n_lines=80, seed=13)
        enc = EncodedCorpus.from_lines(lines, min_count=1)
        params = dict(dim=7, k=3, mode=mode, window=3, negatives=3,
                      subsample=3e-2, multi_sense_size=12, min_count=1,
                      seed=21, epochs=2)
        params.update(extra)
        cfg = TrainingConfig(**params)
        (G1, S1, L1), (G2, S2, L2) = _train_both(enc, cfg)
        assert np.array_equal(G1.matrix, G2.matrix)
        assert np.array_equal(S1.emb, S2.emb)
        assert np.array_equal(S1.assign, S2.assign)
        assert np.array_equal(S1.counts, S2.counts)
        assert np.array_equal(S1.n_senses, S2.n_senses)
        for e1, e2 in zip(L1.epochs, L2.epochs):
            assert e1 == e2


class TestTrainBehavior:
    def test_single_token_corpus_tables_unchanged(self):
        enc = EncodedCorpus.from_lines(["solo"], min_count=1)
        cfg = TrainingConfig(dim=4, min_count=1, multi_sense_size=1, k=2, subsample=None)
        G, S, log = train(enc, cfg)
        fresh_G = WordTable.random_init(enc.vocab, 4, cfg.seed)
        fresh_S = SenseTable.fixed_init(enc.vocab, 4, 2, [0], cfg.seed)
        assert np.array_equal(G.matrix, fresh_G.matrix)
        assert np.array_equal(S.emb, fresh_S.emb)
        assert np.all(S.counts == 0)
        assert log.epochs[0].tokens == 1 and log.epochs[0].assigned == 0

    def test_fixed_mode_k_senses_everywhere(self, small_corpus, tiny_config):
        _, S, _ = train(small_corpus, tiny_config)
        for wid in range(len(small_corpus.vocab)):
            expected = tiny_config.k if wid in S.multi_sense_ids else 1
            assert S.n_senses_of(wid) == expected

    def test_crp_sense_counts_non_decreasing_and_conserved(self, small_corpus, tiny_config):
        cfg = dataclasses.replace(tiny_config, mode="crp", gamma=1.0)
        _, S, log = train(small_corpus, cfg)
        assert int(S.n_senses.min()) >= 1
        assert int(S.counts.sum()) == sum(e.assigned for e in log.epochs)

    def test_crp_gamma_zero_single_sense_everywhere(self, small_corpus, tiny_config):
        cfg = dataclasses.replace(tiny_config, mode="crp", gamma=0.0)
        _, S, _ = train(small_corpus, cfg)
        assert int(S.n_senses.max()) == 1

    def test_bit_reproducible(self, small_corpus, tiny_config):
        G1, S1, _ = train(small_corpus, tiny_config)
        G2, S2, _ = train(small_corpus, tiny_config)
        assert np.array_equal(G1.matrix, G2.matrix)
        assert np.array_equal(S1.emb, S2.emb)

    def test_seed_changes_result(self, small_corpus, tiny_config):
        G1, _, _ = train(small_corpus, tiny_config)
        G2, _, _ = train(small_corpus, dataclasses.replace(tiny_config, seed=99))
        assert not np.array_equal(G1.matrix, G2.matrix)

    def test_trainlog_jsonl_round_trip(self, small_corpus, tiny_config, tmp_path):
        _, _, log = train(small_corpus, tiny_config)
        p = tmp_path / "log.jsonl"
        log.save_jsonl(p)
        loaded = TrainLog.load_jsonl(p)
        assert loaded == log
        first = json.loads(p.read_text().splitlines()[0])
        assert {"epoch", "tokens", "new_senses", "mean_loss"} <= set(first)

    def test_threads_parallel_runs(self, small_corpus, tiny_config):
        # racy-parallel contract: it runs and produces finite tables
        G, S, log = train(small_corpus, tiny_config, threads=2)
        assert np.all(np.isfinite(G.matrix)) and np.all(np.isfinite(S.emb))
        assert sum(e.tokens for e in log.epochs) > 0


class TestReductions:
    def test_fixed_k1_equals_plain_sgns(self):
        lines = random_corpus_lines(n_words=40, n_lines=150, seed=3)
        enc = EncodedCorpus.from_lines(lines, min_count=1)
        cfg = TrainingConfig(dim=12, k=1, mode="fixed", window=4, negatives=4,
                             subsample=1e-2, multi_sense_size=40, min_count=1, seed=11)
        G_fix, S_fix, _ = train(enc, cfg)
        pred, G_plain, _ = train_word_embeddings(enc, cfg)
        assert np.array_equal(S_fix.first_sense_vectors(), pred.matrix)
        assert np.array_equal(G_fix.matrix, G_plain.matrix)

    def test_crp_gamma0_equals_plain_continuation(self):
        lines = random_corpus_lines(n_words=40, n_lines=150, seed=3)
        enc = EncodedCorpus.from_lines(lines, min_count=1)
        cfg = TrainingConfig(dim=12, gamma=0.0, mode="crp", window=4, negatives=4,
                             subsample=1e-2, multi_sense_size=40, min_count=1, seed=11)
        pred1, glob1, _ = train_word_embeddings(enc, cfg)
        G_crp, S_crp, _ = train(enc, cfg, pretrained=(pred1, glob1))
        pred2, glob2, _ = train_word_embeddings(enc, cfg, init=(pred1, glob1))
        assert np.array_equal(S_crp.first_sense_vectors(), pred2.matrix)
        assert np.array_equal(G_crp.matrix, glob2.matrix)
