"""Ablation baselines: CRP sense clustering over PPMI vectors, and per-target
k-means over embedding context vectors.

The CRP-PPMI trainer reuses the induction loop's stream discipline
(subsampling, dynamic windows, CRP draws) and the shared `crp_choose` kernel;
only the context representation differs (sparse PPMI row means, frozen - no
gradient updates). WE-Kmeans clusters the test instances of each target word
over context vectors built from an already-trained global word table.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import rng
from .corpus import EncodedCorpus, Vocabulary, extract_windows, keep_probs
from .induction import crp_choose
from .wsi import Instance, LabelResult, Stoplist, context_vec_test, select_context_words

logger = logging.getLogger(__name__)


@dataclass
class PpmiModel:
    """Sparse positive-PMI rows over a shared vocabulary.

    Only strictly positive values are stored; zeros are implicit.
    """

    rows: dict[int, dict[int, float]]
    word_marginals: np.ndarray | None
    ctx_marginals: np.ndarray | None
    total_pairs: int
    vocab: Vocabulary
    cds: float = 1.0

    def row(self, wid: int) -> dict[int, float]:
        return self.rows.get(wid, {})

    def dense(self) -> np.ndarray:
        out = np.zeros((len(self.vocab), len(self.vocab)), dtype=np.float64)
        for wid, row in self.rows.items():
            for cid, val in row.items():
                out[wid, cid] = val
        return out


def build_ppmi(
    corpus: EncodedCorpus, window_size: int, cds: float = 1.0
) -> PpmiModel:
    """PPMI(w,c) = max(0, ln(N(w,c) * Z / (N(w) * N(c)^cds))) over symmetric
    fixed-window co-occurrences within sentences.

    cds = 1 (default) is plain PPMI with Z = N, the total pair count;
    cds < 1 applies context-distribution smoothing (Z = sum_c N(c)^cds).
    """
    if window_size < 1:
        raise ValueError(f"window_size must be >= 1, got {window_size}")
    v = len(corpus.vocab)
    pair_counts: dict[int, dict[int, int]] = {}
    word_marginals = np.zeros(v, dtype=np.int64)
    for sent in corpus.iter_sentences():
        n = len(sent)
        for i in range(n):
            wi = int(sent[i])
            for j in range(i + 1, min(i + 1 + window_size, n)):
                wj = int(sent[j])
                pair_counts.setdefault(wi, {})[wj] = pair_counts.setdefault(wi, {}).get(wj, 0) + 1
                pair_counts.setdefault(wj, {})[wi] = pair_counts.setdefault(wj, {}).get(wi, 0) + 1
                word_marginals[wi] += 1
                word_marginals[wj] += 1
    ctx_marginals = word_marginals.copy()  # symmetric counting
    total = int(word_marginals.sum())
    if cds == 1.0:
        z = float(total)
        ctx_mass = ctx_marginals.astype(np.float64)
    else:
        ctx_mass = ctx_marginals.astype(np.float64) ** cds
        z = float(ctx_mass.sum())
    rows: dict[int, dict[int, float]] = {}
    for wid, counts in pair_counts.items():
        row = {}
        for cid, n_wc in counts.items():
            val = math.log(n_wc * z / (word_marginals[wid] * ctx_mass[cid]))
            if val > 0.0:
                row[cid] = val
        if row:
            rows[wid] = row
    return PpmiModel(rows, word_marginals, ctx_marginals, total, corpus.vocab, cds)


def ppmi_context_vec(context_ids: Sequence[int], model: PpmiModel) -> dict[int, float]:
    """Mean of the PPMI rows of the given (already selected) context ids."""
    n = len(context_ids)
    if n == 0:
        return {}
    acc: dict[int, float] = {}
    for wid in context_ids:
        for cid, val in model.row(int(wid)).items():
            acc[cid] = acc.get(cid, 0.0) + val
    return {cid: val / n for cid, val in acc.items()}


def sparse_cosine(a: Mapping[int, float], b: Mapping[int, float]) -> float:
    if len(b) < len(a):
        a, b = b, a
    dot = sum(val * b[k] for k, val in a.items() if k in b)
    na = math.sqrt(sum(v * v for v in a.values()))
    nb = math.sqrt(sum(v * v for v in b.values()))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (na * nb)


def save_ppmi(model: PpmiModel, path) -> None:
    """Text format: header "W C", then one sparse row "surface ctx:val ..." per word."""
    v = len(model.vocab)
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{v} {v}\n")
        for wid in range(v):
            parts = [model.vocab.surface(wid)]
            for cid in sorted(model.row(wid)):
                parts.append(f"{model.vocab.surface(cid)}:{model.rows[wid][cid]!r}")
            f.write(" ".join(parts) + "\n")


def load_ppmi(path, vocab: Vocabulary) -> PpmiModel:
    """Read the sparse text format (marginals are not part of the format)."""
    rows: dict[int, dict[int, float]] = {}
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}:1: expected header 'W C'")
        for lineno, line in enumerate(f, start=2):
            parts = line.split()
            if not parts:
                continue
            wid = vocab.id_of(parts[0])
            row = {}
            for chunk in parts[1:]:
                try:
                    surface, val = chunk.rsplit(":", 1)
                    row[vocab.id_of(surface)] = float(val)
                except (ValueError, KeyError):
                    raise ValueError(f"{path}:{lineno}: bad ctx:val chunk {chunk!r}") from None
            if row:
                rows[wid] = row
    return PpmiModel(rows, None, None, 0, vocab)


# -- k-means -----------------------------------------------------------------


@dataclass
class KmeansResult:
    centroids: np.ndarray
    assignment: np.ndarray
    inertia: float
    inertia_history: list[float] = field(default_factory=list)
    n_iter: int = 0
    empty_clusters: tuple[int, ...] = ()


def kmeans_plusplus_init(points: np.ndarray, k: int, rng_: np.random.Generator) -> np.ndarray:
    """Standard D^2-weighted seeding; duplicates arise only when n < k."""
    n = len(points)
    centroids = np.empty((k, points.shape[1]), dtype=np.float64)
    first = int(rng_.integers(n))
    centroids[0] = points[first]
    d2 = np.sum((points - centroids[0]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            idx = int(rng_.integers(n))
        else:
            idx = int(rng_.choice(n, p=d2 / total))
        centroids[j] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centroids[j]) ** 2, axis=1))
    return centroids


def kmeans(
    points: Sequence[Sequence[float]] | np.ndarray,
    k: int,
    seed: int = 0,
    max_iter: int = 100,
) -> KmeansResult:
    """Lloyd's algorithm with k-means++ seeding, Euclidean distance.

    Stops when assignments are stable or after max_iter. Empty clusters are
    re-seeded to the point farthest from its assigned centroid when there
    are enough points, otherwise reported in `empty_clusters`.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.ndim != 2 or len(points) == 0:
        raise ValueError("points must be a non-empty 2-d array")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    n = len(points)
    rng_ = np.random.default_rng(seed)
    centroids = kmeans_plusplus_init(points, k, rng_)
    assignment = np.full(n, -1, dtype=np.int64)
    history: list[float] = []
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        d2 = np.sum((points[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_assignment = np.argmin(d2, axis=1)
        if n >= k:
            for j in range(k):
                if not np.any(new_assignment == j):
                    # re-seed an empty cluster to the farthest point
                    farthest = int(np.argmax(d2[np.arange(n), new_assignment]))
                    centroids[j] = points[farthest]
                    d2[:, j] = np.sum((points - centroids[j]) ** 2, axis=1)
                    new_assignment = np.argmin(d2, axis=1)
                    logger.debug("kmeans: re-seeded empty cluster %d", j)
        history.append(float(d2[np.arange(n), new_assignment].sum()))
        if np.array_equal(new_assignment, assignment):
            break
        assignment = new_assignment
        for j in range(k):
            members = points[assignment == j]
            if len(members):
                centroids[j] = members.mean(axis=0)
    empty = tuple(j for j in range(k) if not np.any(assignment == j))
    return KmeansResult(centroids, assignment, history[-1], history, n_iter, empty)


# -- CRP over PPMI vectors ----------------------------------------------------


@dataclass
class CrpPpmiModel:
    """Per-target sense centroids in sparse PPMI space, with counts."""

    vocab: Vocabulary
    senses: dict[int, list[tuple[dict[int, float], int]]]
    gamma: float
    eps_sim: float


def _selected_context_ids(
    context_ids: Sequence[int],
    target_id: int,
    vocab: Vocabulary,
    stoplist: Stoplist,
) -> list[int]:
    """The footnote rule (length > 3, not the target, not stoplisted) on ids."""
    target_surface = vocab.surface(target_id)
    out = []
    for cid in context_ids:
        s = vocab.surface(int(cid))
        if len(s) > 3 and s != target_surface and s not in stoplist:
            out.append(int(cid))
    return out


def crp_ppmi_train(
    corpus: EncodedCorpus,
    ppmi: PpmiModel,
    target_ids: Sequence[int],
    stoplist: Stoplist,
    gamma: float = 0.5,
    window: int = 5,
    subsample: float | None = 1e-4,
    seed: int = 1,
    sense_cap: int = 10,
    eps_sim: float = 1e-4,
    epochs: int = 1,
    recorder: Callable[..., None] | None = None,
) -> CrpPpmiModel:
    """CRP sense clustering with frozen PPMI context vectors.

    Mirrors induction.train in CRP mode with the context vector swapped to
    `ppmi_context_vec` and no gradient updates: identical subsample/window/CRP
    stream discipline, identical `crp_choose` given identical similarity
    inputs. Each target starts with one zero-count sense at its own PPMI row.
    """
    vocab = corpus.vocab
    targets = {int(t) for t in target_ids}
    senses: dict[int, list[list]] = {
        t: [[dict(ppmi.row(t)), 0]] for t in targets
    }
    kp = keep_probs(vocab, subsample)
    win_stream = rng.CounterStream(seed, rng.WINDOW)
    crp_stream = rng.CounterStream(seed, rng.CRP)
    for epoch in range(epochs):
        sub_seed = rng.stream_seed(seed, rng.SUBSAMPLE, epoch)
        for s in range(corpus.n_sentences):
            lo = int(corpus.sentence_offsets[s])
            sent = corpus.sentence(s)
            uniforms = rng.uniform_array(sub_seed, np.arange(lo, lo + len(sent)))
            positions = [lo + i for i, u in enumerate(uniforms) if u < kp[sent[i]]]
            kept_ids = [int(corpus.ids[p]) for p in positions]
            for win in extract_windows(kept_ids, window, win_stream, positions):
                if win.target not in targets or not win.context:
                    continue
                selected = _selected_context_ids(win.context, win.target, vocab, stoplist)
                if not selected:
                    continue
                v = ppmi_context_vec(selected, ppmi)
                word_senses = senses[win.target]
                nk = len(word_senses)
                counts = [c for _, c in word_senses]
                sims = [
                    max(sparse_cosine(centroid, v), eps_sim)
                    for centroid, _ in word_senses
                ]
                allow_new = nk < sense_cap and gamma > 0.0
                total = sum(c * s_ for c, s_ in zip(counts, sims)) + (
                    gamma if allow_new else 0.0
                )
                u = crp_stream.random() if (total > 0.0 and nk > 0) else None
                k = crp_choose(counts, sims, gamma, allow_new, u)
                if recorder is not None:
                    recorder(win.target, counts, sims, allow_new, u, k)
                if k == nk:
                    word_senses.append([dict(v), 0])
                centroid, count = word_senses[k]
                for cid, val in v.items():
                    centroid[cid] = (count * centroid.get(cid, 0.0) + val) / (count + 1)
                for cid in list(centroid):
                    if cid not in v:
                        centroid[cid] = count * centroid[cid] / (count + 1)
                        if centroid[cid] == 0.0:
                            del centroid[cid]
                word_senses[k][1] = count + 1
    return CrpPpmiModel(
        vocab,
        {t: [(dict(c), n) for c, n in senses[t]] for t in targets},
        gamma,
        eps_sim,
    )


def crp_ppmi_label(
    instances: Sequence[Instance],
    model: CrpPpmiModel,
    ppmi: PpmiModel,
    stoplist: Stoplist,
    rule: str = "all",
) -> list[LabelResult]:
    """Nearest-sense-centroid labels over PPMI context vectors."""
    results = []
    for inst in instances:
        wid = model.vocab.get(f"{inst.lemma}.{inst.pos}")
        if wid < 0:
            wid = model.vocab.get(inst.lemma)
        flags: list[str] = []
        if wid < 0 or wid not in model.senses:
            results.append(
                LabelResult(inst.instance_id, inst.target_key, 1, 0.0, ("unknown_target",))
            )
            continue
        selected = [
            model.vocab.id_of(w)
            for w in select_context_words(inst, stoplist, rule)
            if w in model.vocab
        ]
        v = ppmi_context_vec(selected, ppmi)
        if not v:
            results.append(
                LabelResult(inst.instance_id, inst.target_key, 1, 0.0, ("zero_context",))
            )
            continue
        sims = [sparse_cosine(centroid, v) for centroid, _ in model.senses[wid]]
        best = int(np.argmax(sims))
        results.append(
            LabelResult(inst.instance_id, inst.target_key, best + 1, float(sims[best]), tuple(flags))
        )
    return results


# -- k-means over embedding context vectors -----------------------------------


def we_kmeans_label(
    instances: Sequence[Instance],
    word_table,
    stoplist: Stoplist,
    k: int = 3,
    seed: int = 0,
    max_iter: int = 100,
    rule: str = "all",
) -> tuple[list[LabelResult], dict[str, KmeansResult]]:
    """Cluster each target's instance context vectors into k groups.

    Context vectors come from the trained global word table via the shared
    test-time rule; cluster ids become 1-based sense labels per target.
    """
    by_target: dict[str, list[Instance]] = {}
    for inst in instances:
        by_target.setdefault(inst.target_key, []).append(inst)
    results: dict[str, LabelResult] = {}
    fits: dict[str, KmeansResult] = {}
    for target in sorted(by_target):
        group = by_target[target]
        vectors = []
        for inst in group:
            cv, _ = context_vec_test(inst, word_table, stoplist, rule)
            vectors.append(np.asarray(cv.values, dtype=np.float64))
        fit = kmeans(np.vstack(vectors), k=k, seed=seed, max_iter=max_iter)
        fits[target] = fit
        for inst, cluster in zip(group, fit.assignment):
            results[inst.instance_id] = LabelResult(
                inst.instance_id, target, int(cluster) + 1, 0.0
            )
    ordered = [results[inst.instance_id] for inst in instances]
    return ordered, fits
