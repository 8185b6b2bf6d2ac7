"""Joint sense-embedding training: the per-token label-and-update loop.

Per epoch, every retained token becomes a target: its context vector is the
mean of the global vectors in a dynamically shrunk window, a sense is chosen
(fixed-K argmax or CRP sampling), the chosen sense's assignment centroid
absorbs the context vector by exact running mean, and the sense embedding is
trained by skip-gram negative sampling against the context words' global
vectors. All polysemous words share the one global table, so their sense
models are trained jointly.

Two engines compute the identical run: a fused numba kernel ("fast") and a
pure-Python composition of the public per-operation API ("reference"). They
share the float helpers in `vectors`/`sgns` and the counter streams in
`rng`, and tests assert their outputs are bit-identical.
"""

from __future__ import annotations

import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from numba import njit, uint64

from . import rng
from .corpus import EncodedCorpus, Window, extract_windows, keep_probs
from .sgns import NegativeSampler, find_first_greater, pair_update
from .vectors import ContextVector, SenseTable, WordTable, fold_mean32, mean_rows32, sim32

logger = logging.getLogger(__name__)

MODE_PLAIN, MODE_FIXED, MODE_CRP = 0, 1, 2
_MODE_CODES = {"plain": MODE_PLAIN, "fixed": MODE_FIXED, "crp": MODE_CRP}


class ConfigError(ValueError):
    """A training configuration failed validation before any work started."""


@dataclass
class TrainingConfig:
    dim: int = 300
    k: int = 3
    gamma: float = 0.5
    window: int = 5
    negatives: int = 5
    lr: float = 0.025
    lr_floor_ratio: float = 1e-4
    epochs: int = 1
    subsample: float | None = 1e-4
    multi_sense_size: int = 6000
    min_count: int = 5
    seed: int = 1
    mode: str = "fixed"
    sense_cap: int = 10
    eps_sim: float = 1e-4
    assign_vector: str = "cluster"
    output_vector: str = "embedding"
    similarity: str = "cosine"

    def validate(self) -> None:
        checks = [
            (self.dim >= 1, f"dim must be >= 1, got {self.dim}"),
            (self.k >= 1, f"k must be >= 1, got {self.k}"),
            (self.gamma >= 0.0, f"gamma must be >= 0, got {self.gamma}"),
            (self.window >= 1, f"window must be >= 1, got {self.window}"),
            (self.negatives >= 1, f"negatives must be >= 1, got {self.negatives}"),
            (self.lr > 0.0, f"lr must be > 0, got {self.lr}"),
            (0.0 < self.lr_floor_ratio <= 1.0, "lr_floor_ratio must be in (0, 1]"),
            (self.epochs >= 1, f"epochs must be >= 1, got {self.epochs}"),
            (
                self.subsample is None or self.subsample > 0.0,
                f"subsample threshold must be > 0 or None, got {self.subsample}",
            ),
            (self.multi_sense_size >= 0, "multi_sense_size must be >= 0"),
            (self.sense_cap >= 1, f"sense_cap must be >= 1, got {self.sense_cap}"),
            (self.eps_sim > 0.0, f"eps_sim must be > 0, got {self.eps_sim}"),
            (self.mode in ("fixed", "crp"), f"mode must be fixed|crp, got {self.mode!r}"),
            (
                self.assign_vector in ("cluster", "embedding"),
                f"assign_vector must be cluster|embedding, got {self.assign_vector!r}",
            ),
            (
                self.output_vector in ("cluster", "embedding"),
                f"output_vector must be cluster|embedding, got {self.output_vector!r}",
            ),
            (
                self.similarity in ("cosine", "dot"),
                f"similarity must be cosine|dot, got {self.similarity!r}",
            ),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class SenseLabel:
    word: int
    k: int
    is_new: bool = False


@dataclass
class EpochStats:
    epoch: int
    tokens: int
    assigned: int
    pairs: int
    new_senses: int
    cap_hits: int
    mean_loss: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "epoch": self.epoch,
                "tokens": self.tokens,
                "assigned": self.assigned,
                "pairs": self.pairs,
                "new_senses": self.new_senses,
                "cap_hits": self.cap_hits,
                "mean_loss": self.mean_loss,
            }
        )


@dataclass
class TrainLog:
    epochs: list[EpochStats] = field(default_factory=list)

    def save_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for e in self.epochs:
                f.write(e.to_json() + "\n")

    @classmethod
    def load_jsonl(cls, path) -> "TrainLog":
        log = cls()
        with open(path, encoding="utf-8") as f:
            for line in f:
                d = json.loads(line)
                log.epochs.append(EpochStats(**d))
        return log


# -- public per-operation API ------------------------------------------------


def context_vec_train(window: Window, word_table: WordTable) -> ContextVector:
    """Mean of the global vectors of the window's context ids."""
    ids = np.asarray(window.context, dtype=np.int64)
    matrix = getattr(word_table, "matrix", word_table)
    return ContextVector(mean_rows32(matrix, ids), support=len(ids))


def _assign_rows(sense_table: SenseTable, use: str):
    return sense_table.assign if use == "cluster" else sense_table.emb


def sense_label_fix(
    word: int | str,
    v_c,
    sense_table: SenseTable,
    use: str = "cluster",
    similarity: str = "cosine",
) -> SenseLabel:
    """Deterministic argmax-similarity sense; ties go to the lowest index."""
    wid = word if isinstance(word, int) else sense_table.vocab.id_of(word)
    nk = int(sense_table.n_senses[wid])
    if nk < 1:
        raise ValueError(f"word {wid} has no senses")
    values = np.asarray(getattr(v_c, "values", v_c), dtype=np.float32)
    rows = _assign_rows(sense_table, use)
    base = int(sense_table.offsets[wid])
    use_cos = similarity == "cosine"
    best_k, best = 0, sim32(rows[base], values, use_cos)
    for k in range(1, nk):
        s = sim32(rows[base + k], values, use_cos)
        if s > best:
            best, best_k = s, k
    return SenseLabel(wid, best_k)


def crp_choose(
    counts: Sequence[int],
    sims: Sequence[float],
    gamma: float,
    allow_new: bool,
    u: float | None,
) -> int:
    """Pure CRP pick shared by dense and PPMI pipelines.

    Weights are counts[k] * sims[k] plus `gamma` for the new-sense outcome
    (index len(counts)) when allowed. `u` in [0, 1) drives the pick; a total
    weight of 0 falls back deterministically to the highest-similarity sense
    (u unused). sims must already be floored at eps_sim by the caller.
    """
    n = len(counts)
    weights = [counts[k] * sims[k] for k in range(n)]
    total = sum(weights)
    if allow_new:
        total += gamma
    if total <= 0.0:
        if n == 0:
            raise ValueError("CRP choice with no senses and gamma == 0")
        best_k = 0
        for k in range(1, n):
            if sims[k] > sims[best_k]:
                best_k = k
        return best_k
    if n == 0:
        return 0  # only the new-sense outcome exists
    x = u * total
    acc = 0.0
    for k in range(n):
        acc += weights[k]
        if x < acc:
            return k
    return n if allow_new else n - 1


def sense_label_crp(
    word: int | str,
    v_c,
    sense_table: SenseTable,
    gamma: float,
    rng_like,
    eps_sim: float = 1e-4,
    cap: int | None = None,
    use: str = "cluster",
    similarity: str = "cosine",
) -> SenseLabel:
    """Sample a sense: weight counts[k]*max(sim, eps_sim) per existing sense,
    constant gamma for a new one. The caller materializes the new sense.

    Consumes one draw from `rng_like` only when the outcome is not forced.
    """
    if gamma < 0.0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    wid = word if isinstance(word, int) else sense_table.vocab.id_of(word)
    nk = int(sense_table.n_senses[wid])
    if nk == 0 and gamma <= 0.0:
        raise ValueError(f"word {wid} has no senses and gamma is 0: no valid outcome")
    values = np.asarray(getattr(v_c, "values", v_c), dtype=np.float32)
    rows = _assign_rows(sense_table, use)
    base = int(sense_table.offsets[wid])
    use_cos = similarity == "cosine"
    limit = sense_table.capacity(wid) if cap is None else min(cap, sense_table.capacity(wid))
    allow_new = nk < limit and gamma > 0.0
    sims = [max(sim32(rows[base + k], values, use_cos), eps_sim) for k in range(nk)]
    counts = [int(sense_table.counts[base + k]) for k in range(nk)]
    total = sum(c * s for c, s in zip(counts, sims)) + (gamma if allow_new else 0.0)
    u = rng_like.random() if (total > 0.0 and nk > 0) else None
    k = crp_choose(counts, sims, gamma, allow_new, u)
    return SenseLabel(wid, k, is_new=k == nk)


def crp_pretrain_init(
    word_table: WordTable,
    multi_sense_ids: Sequence[int] | None = None,
    cap: int = 10,
    target_vocab=None,
) -> SenseTable:
    """Start every word with one zero-count sense at its pre-trained vector."""
    vocab = target_vocab if target_vocab is not None else word_table.vocab
    if multi_sense_ids is None:
        multi_sense_ids = vocab.top_ids(TrainingConfig.multi_sense_size)
    if vocab is word_table.vocab or vocab == word_table.vocab:
        vectors = word_table.matrix.copy()
    else:
        missing = [s for s, _ in vocab.entries if s not in word_table.vocab.index]
        if missing:
            shown = ", ".join(missing[:20])
            more = f" (+{len(missing) - 20} more)" if len(missing) > 20 else ""
            raise ValueError(
                f"{len(missing)} vocabulary words have no pre-trained vector: {shown}{more}"
            )
        src = [word_table.vocab.id_of(s) for s, _ in vocab.entries]
        vectors = word_table.matrix[src].copy()
    return SenseTable.crp_init(vocab, vectors, multi_sense_ids, cap)


# -- fused kernel ------------------------------------------------------------


@njit(cache=True, nogil=True)
def _epoch_kernel(
    ids,
    sent_offsets,
    sent_lo,
    sent_hi,
    keep_prob,
    G,
    emb,
    assign,
    counts,
    offsets,
    n_senses,
    is_multi,
    mode,
    gamma,
    eps_sim,
    use_cluster,
    use_cosine,
    neg_cum,
    n_negatives,
    window,
    lr0,
    lr_floor_ratio,
    budget,
    pos_base,
    sub_seed,
    win_seed,
    neg_seed,
    crp_seed,
    counters,
    max_cap,
    stats,
):
    d = G.shape[1]
    scratch = np.empty(d, dtype=np.float64)
    negs = np.empty(n_negatives, dtype=np.int64)
    ctx_buf = np.empty(2 * window, dtype=np.int64)
    weights = np.empty(max_cap, dtype=np.float64)
    sims = np.empty(max_cap, dtype=np.float64)
    win_i = counters[0]
    neg_i = counters[1]
    crp_i = counters[2]
    v_c = np.zeros(d, dtype=np.float32)
    for s in range(sent_lo, sent_hi):
        lo = sent_offsets[s]
        hi = sent_offsets[s + 1]
        m = hi - lo
        kept = np.empty(m, dtype=np.int64)
        n_kept = 0
        for i in range(m):
            p = lo + i
            if rng.stream_uniform(sub_seed, uint64(p)) < keep_prob[ids[p]]:
                kept[n_kept] = p
                n_kept += 1
        for t in range(n_kept):
            p_t = kept[t]
            w_t = ids[p_t]
            b = 1 + int(rng.stream_uniform(win_seed, win_i) * window)
            win_i += uint64(1)
            stats[0] += 1.0
            c_lo = t - b if t - b > 0 else 0
            c_hi = t + 1 + b if t + 1 + b < n_kept else n_kept
            n_ctx = 0
            for q in range(c_lo, c_hi):
                if q != t:
                    ctx_buf[n_ctx] = ids[kept[q]]
                    n_ctx += 1
            if n_ctx == 0:
                continue
            stats[5] += 1.0
            if mode != MODE_PLAIN:
                v_c = mean_rows32(G, ctx_buf[:n_ctx])
            base = offsets[w_t]
            slot = base
            if mode == MODE_FIXED:
                nk = n_senses[w_t]
                if nk > 1:
                    rows = assign if use_cluster == 1 else emb
                    best_k = 0
                    best = sim32(rows[base], v_c, use_cosine == 1)
                    for k in range(1, nk):
                        sk = sim32(rows[base + k], v_c, use_cosine == 1)
                        if sk > best:
                            best = sk
                            best_k = k
                    slot = base + best_k
            elif mode == MODE_CRP:
                if is_multi[w_t] == 1:
                    nk = n_senses[w_t]
                    word_cap = offsets[w_t + 1] - offsets[w_t]
                    allow_new = nk < word_cap and gamma > 0.0
                    if nk >= word_cap and gamma > 0.0:
                        stats[4] += 1.0
                    rows = assign if use_cluster == 1 else emb
                    total = 0.0
                    for k in range(nk):
                        sk = sim32(rows[base + k], v_c, use_cosine == 1)
                        if sk < eps_sim:
                            sk = eps_sim
                        sims[k] = sk
                        weights[k] = counts[base + k] * sk
                        total += weights[k]
                    if allow_new:
                        total += gamma
                    if total <= 0.0:
                        best_k = 0
                        for k in range(1, nk):
                            if sims[k] > sims[best_k]:
                                best_k = k
                        slot = base + best_k
                    else:
                        u = rng.stream_uniform(crp_seed, crp_i)
                        crp_i += uint64(1)
                        x = u * total
                        acc = 0.0
                        chosen = -1
                        for k in range(nk):
                            acc += weights[k]
                            if x < acc:
                                chosen = k
                                break
                        if chosen < 0:
                            if allow_new:
                                new_slot = base + nk
                                for j in range(d):
                                    emb[new_slot, j] = v_c[j]
                                    assign[new_slot, j] = v_c[j]
                                counts[new_slot] = 0
                                n_senses[w_t] = nk + 1
                                stats[3] += 1.0
                                chosen = nk
                            else:
                                chosen = nk - 1
                        slot = base + chosen
            if mode != MODE_PLAIN:
                fold_mean32(assign[slot], v_c, counts[slot])
            frac = 1.0 - (pos_base + p_t) / budget
            if frac < lr_floor_ratio:
                frac = lr_floor_ratio
            lr = lr0 * frac
            pred = emb[slot]
            for q in range(c_lo, c_hi):
                if q == t:
                    continue
                c_w = ids[kept[q]]
                for nn in range(n_negatives):
                    while True:
                        u = rng.stream_uniform(neg_seed, neg_i)
                        neg_i += uint64(1)
                        cand = find_first_greater(neg_cum, u)
                        if cand != c_w:
                            negs[nn] = cand
                            break
                stats[2] += pair_update(pred, G, c_w, negs, lr, scratch)
                stats[1] += 1.0
            if mode != MODE_PLAIN:
                counts[slot] += 1
    counters[0] = win_i
    counters[1] = neg_i
    counters[2] = crp_i


# -- engines -----------------------------------------------------------------


def _run_fast(corpus, config, G, senses, mode, threads):
    vocab = corpus.vocab
    kp = keep_probs(vocab, config.subsample)
    neg_cum = NegativeSampler(vocab.counts_array(), config.seed).cum
    budget = config.epochs * corpus.n_tokens
    win_seed = rng.stream_seed(config.seed, rng.WINDOW)
    neg_seed = rng.stream_seed(config.seed, rng.NEGATIVE)
    crp_seed = rng.stream_seed(config.seed, rng.CRP)
    counters = np.zeros(3, dtype=np.uint64)
    max_cap = int(np.max(np.diff(senses.offsets))) if len(vocab) else 1
    log = TrainLog()
    for epoch in range(config.epochs):
        sub_seed = rng.stream_seed(config.seed, rng.SUBSAMPLE, epoch)
        stats = np.zeros(6, dtype=np.float64)
        args = dict(
            ids=corpus.ids,
            sent_offsets=corpus.sentence_offsets,
            keep_prob=kp,
            G=G.matrix,
            emb=senses.emb,
            assign=senses.assign,
            counts=senses.counts,
            offsets=senses.offsets,
            n_senses=senses.n_senses,
            is_multi=senses.is_multi,
            mode=mode,
            gamma=config.gamma,
            eps_sim=config.eps_sim,
            use_cluster=1 if config.assign_vector == "cluster" else 0,
            use_cosine=1 if config.similarity == "cosine" else 0,
            neg_cum=neg_cum,
            n_negatives=config.negatives,
            window=config.window,
            lr0=config.lr,
            lr_floor_ratio=config.lr_floor_ratio,
            budget=budget,
            pos_base=epoch * corpus.n_tokens,
            sub_seed=sub_seed,
            max_cap=max_cap,
        )
        if threads <= 1:
            _epoch_kernel(
                sent_lo=0,
                sent_hi=corpus.n_sentences,
                win_seed=win_seed,
                neg_seed=neg_seed,
                crp_seed=crp_seed,
                counters=counters,
                stats=stats,
                **args,
            )
        else:
            bounds = np.linspace(0, corpus.n_sentences, threads + 1).astype(np.int64)
            shard_stats = [np.zeros(6, dtype=np.float64) for _ in range(threads)]
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = []
                for sh in range(threads):
                    salt = np.uint64((epoch * threads + sh + 1))
                    futures.append(
                        pool.submit(
                            _epoch_kernel,
                            sent_lo=int(bounds[sh]),
                            sent_hi=int(bounds[sh + 1]),
                            win_seed=rng.mix64_py(win_seed ^ salt),
                            neg_seed=rng.mix64_py(neg_seed ^ salt),
                            crp_seed=rng.mix64_py(crp_seed ^ salt),
                            counters=np.zeros(3, dtype=np.uint64),
                            stats=shard_stats[sh],
                            **args,
                        )
                    )
                for fut in futures:
                    fut.result()
            for sh_stats in shard_stats:
                stats += sh_stats
        log.epochs.append(
            EpochStats(
                epoch=epoch,
                tokens=int(stats[0]),
                assigned=int(stats[5]),
                pairs=int(stats[1]),
                new_senses=int(stats[3]),
                cap_hits=int(stats[4]),
                mean_loss=float(stats[2] / stats[1]) if stats[1] else 0.0,
            )
        )
    return log


def _run_reference(corpus, config, G, senses, mode, context_provider=None, sgns_updates=True):
    """Python engine composing the public ops; must mirror the kernel exactly.

    `context_provider(window) -> ContextVector` and `sgns_updates=False` are
    the seams the PPMI baseline plugs into.
    """
    vocab = corpus.vocab
    kp = keep_probs(vocab, config.subsample)
    sampler = NegativeSampler(vocab.counts_array(), config.seed)
    win_stream = rng.CounterStream(config.seed, rng.WINDOW)
    crp_stream = rng.CounterStream(config.seed, rng.CRP)
    budget = config.epochs * corpus.n_tokens
    use_cluster = config.assign_vector
    log = TrainLog()
    scratch = np.empty(senses.dim, dtype=np.float64)
    for epoch in range(config.epochs):
        sub_seed = rng.stream_seed(config.seed, rng.SUBSAMPLE, epoch)
        pos_base = epoch * corpus.n_tokens
        tokens = assigned = pairs = new_senses = cap_hits = 0
        loss_sum = 0.0
        for s in range(corpus.n_sentences):
            lo = int(corpus.sentence_offsets[s])
            sent = corpus.sentence(s)
            positions = [
                lo + i
                for i, u in enumerate(
                    rng.uniform_array(sub_seed, np.arange(lo, lo + len(sent)))
                )
                if u < kp[sent[i]]
            ]
            kept_ids = [int(corpus.ids[p]) for p in positions]
            for win in extract_windows(kept_ids, config.window, win_stream, positions):
                tokens += 1
                if not win.context:
                    continue
                if context_provider is not None:
                    cv = context_provider(win)
                    if cv is None or cv.support == 0:
                        continue  # provider may reject a window (e.g. all filtered)
                else:
                    cv = context_vec_train(win, G)
                assigned += 1
                if mode == MODE_PLAIN:
                    label = SenseLabel(win.target, 0)
                elif mode == MODE_FIXED:
                    if senses.n_senses[win.target] > 1:
                        label = sense_label_fix(
                            win.target, cv, senses, use_cluster, config.similarity
                        )
                    else:
                        label = SenseLabel(win.target, 0)
                else:
                    if senses.is_multi[win.target]:
                        if senses.n_senses[win.target] >= senses.capacity(win.target) and config.gamma > 0.0:
                            cap_hits += 1
                        label = sense_label_crp(
                            win.target,
                            cv,
                            senses,
                            config.gamma,
                            crp_stream,
                            config.eps_sim,
                            use=use_cluster,
                            similarity=config.similarity,
                        )
                        if label.is_new:
                            senses.create_sense(win.target, cv.values)
                            new_senses += 1
                    else:
                        label = SenseLabel(win.target, 0)
                slot = senses.slot(win.target, label.k)
                if mode != MODE_PLAIN:
                    fold_mean32(senses.assign[slot], cv.values, int(senses.counts[slot]))
                lr = config.lr * max(1.0 - (pos_base + win.position) / budget, config.lr_floor_ratio)
                if sgns_updates:
                    pred = senses.emb[slot]
                    for c_w in win.context:
                        negs = np.array(
                            [sampler.draw(exclude=c_w) for _ in range(config.negatives)],
                            dtype=np.int64,
                        )
                        loss_sum += pair_update(pred, G.matrix, c_w, negs, lr, scratch)
                        pairs += 1
                if mode != MODE_PLAIN:
                    senses.counts[slot] += 1
        log.epochs.append(
            EpochStats(
                epoch=epoch,
                tokens=tokens,
                assigned=assigned,
                pairs=pairs,
                new_senses=new_senses,
                cap_hits=cap_hits,
                mean_loss=loss_sum / pairs if pairs else 0.0,
            )
        )
    return log


def _run(corpus, config, G, senses, mode, threads, engine):
    if len(corpus.vocab) < 2 and int(np.diff(corpus.sentence_offsets).max()) > 1:
        # pairs would need negatives distinct from the one word
        raise ValueError("training with context pairs needs a vocabulary of >= 2 words")
    if engine == "reference":
        if threads > 1:
            raise ValueError("the reference engine is single-threaded")
        return _run_reference(corpus, config, G, senses, mode)
    if engine != "fast":
        raise ValueError(f"unknown engine {engine!r}")
    if threads > 1 and mode == MODE_CRP:
        logger.warning(
            "CRP sense creation requires serialized access; forcing --threads 1"
        )
        threads = 1
    if threads > 1:
        logger.info("racy-parallel training with %d threads (non-deterministic)", threads)
    return _run_fast(corpus, config, G, senses, mode, threads)


# -- entry points ------------------------------------------------------------


def train_word_embeddings(
    corpus: EncodedCorpus,
    config: TrainingConfig,
    init: tuple[WordTable, WordTable] | None = None,
    threads: int = 1,
    engine: str = "fast",
) -> tuple[WordTable, WordTable, TrainLog]:
    """Plain skip-gram with negative sampling (one predictor row per word).

    Returns (predictor vectors, global vectors, log). Used to pre-train word
    vectors for CRP mode; also the comparison target of the reduction tests.
    """
    config.validate()
    vocab = corpus.vocab
    if init is None:
        senses = SenseTable.single_init(vocab, config.dim, config.seed)
        G = WordTable.random_init(vocab, config.dim, config.seed)
    else:
        pred0, glob0 = init
        senses = SenseTable.crp_init(vocab, pred0.matrix.copy(), (), cap=1)
        G = glob0.copy()
    log = _run(corpus, config, G, senses, MODE_PLAIN, threads, engine)
    return WordTable(senses.first_sense_vectors(), vocab), G, log


def train(
    corpus: EncodedCorpus,
    config: TrainingConfig,
    pretrained: tuple[WordTable, WordTable] | None = None,
    threads: int = 1,
    engine: str = "fast",
) -> tuple[WordTable, SenseTable, TrainLog]:
    """Run the sense-induction training loop per the configured mode.

    fixed: K senses per multi-sense word, argmax assignment.
    crp: starts from pre-trained word vectors (given as (predictor, global)
    tables, or trained internally when absent) and grows senses on demand.
    """
    config.validate()
    vocab = corpus.vocab
    multi_ids = vocab.top_ids(config.multi_sense_size)
    if config.mode == "fixed":
        G = WordTable.random_init(vocab, config.dim, config.seed)
        senses = SenseTable.fixed_init(vocab, config.dim, config.k, multi_ids, config.seed)
    else:
        if pretrained is None:
            logger.info("no pre-trained vectors given; running a plain SGNS pass")
            pred, glob, _ = train_word_embeddings(corpus, config, threads=threads, engine=engine)
        else:
            pred, glob = pretrained
        senses = crp_pretrain_init(pred, multi_ids, config.sense_cap, target_vocab=vocab)
        if glob.vocab is vocab or glob.vocab == vocab:
            G = glob.copy()
        else:
            missing = [s for s, _ in vocab.entries if s not in glob.vocab.index]
            if missing:
                raise ValueError(
                    f"{len(missing)} vocabulary words missing from pre-trained global table"
                )
            src = [glob.vocab.id_of(s) for s, _ in vocab.entries]
            G = WordTable(glob.matrix[src].copy(), vocab)
    mode = _MODE_CODES[config.mode]
    log = _run(corpus, config, G, senses, mode, threads, engine)
    return G, senses, log
