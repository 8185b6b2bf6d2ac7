"""Shared global word embeddings, per-word sense tables, persistence.

Tables are float32 in memory; the binary format stores rows as little-endian
32-bit floats so load(save(x)) reproduces x bit-exactly. The njit helpers
(`mean_rows32`, `sim32`, `fold_mean32`) are the single implementation of the
float arithmetic that feeds training decisions: the fused kernel and the
pure-Python reference engine both call them, which is what makes the two
engines bit-identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from numba import njit

from . import rng
from .corpus import Vocabulary

MAGIC = b"SEWSI1"
_SENSE_SLOT_KEY = 1 << 20  # row key stride for per-(word, slot) init streams


class TableFormatError(ValueError):
    """A table file failed to parse; message carries the file offset/line."""


def cosine(a, b) -> float:
    """Cosine similarity in [-1, 1]; 0.0 if either vector has zero norm."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


@njit(cache=True)
def sim32(row, v, use_cosine):
    """Dot or cosine of two float32 vectors, accumulated in float64."""
    dot = 0.0
    for d in range(row.shape[0]):
        dot += np.float64(row[d]) * np.float64(v[d])
    if not use_cosine:
        return dot
    na = 0.0
    nb = 0.0
    for d in range(row.shape[0]):
        na += np.float64(row[d]) * np.float64(row[d])
        nb += np.float64(v[d]) * np.float64(v[d])
    if na == 0.0 or nb == 0.0:
        return 0.0
    return dot / (np.sqrt(na) * np.sqrt(nb))


@njit(cache=True)
def mean_rows32(matrix, ids):
    """float32 mean of the selected rows (float64 accumulation)."""
    d = matrix.shape[1]
    out = np.zeros(d, dtype=np.float32)
    n = ids.shape[0]
    if n == 0:
        return out
    for j in range(d):
        acc = 0.0
        for i in range(n):
            acc += np.float64(matrix[ids[i], j])
        out[j] = np.float32(acc / n)
    return out


@njit(cache=True)
def fold_mean32(row, v, n):
    """Running mean update row <- (n*row + v) / (n+1), in place."""
    for d in range(row.shape[0]):
        row[d] = np.float32(
            (np.float64(n) * np.float64(row[d]) + np.float64(v[d])) / (n + 1.0)
        )


@dataclass(frozen=True)
class ContextVector:
    """Mean of contributing word vectors; all-zero when support is 0."""

    values: np.ndarray
    support: int


def init_global_matrix(vocab_size: int, dim: int, seed: int) -> np.ndarray:
    """Global word vectors, uniform in [-0.5/D, 0.5/D), keyed per (seed, id)."""
    s = rng.stream_seed(seed, rng.INIT_GLOBAL)
    rows = np.arange(vocab_size, dtype=np.uint64) * np.uint64(_SENSE_SLOT_KEY)
    keys = rows[:, None] + np.arange(dim, dtype=np.uint64)[None, :]
    u = rng.uniform_array(s, keys.ravel()).reshape(vocab_size, dim)
    return ((u - 0.5) / dim).astype(np.float32)


def init_sense_rows(seed: int, word_ids: np.ndarray, slots: np.ndarray, dim: int) -> np.ndarray:
    """Sense-embedding init rows, uniform in [-0.5/D, 0.5/D) per (seed, word, slot).

    Slot 0 doubles as the plain skip-gram predictor init for the word, which
    is what makes the K=1 reduction exact.
    """
    s = rng.stream_seed(seed, rng.INIT_SENSE)
    keys = (
        word_ids.astype(np.uint64) * np.uint64(_SENSE_SLOT_KEY)
        + slots.astype(np.uint64)
    )
    keys = keys[:, None] * np.uint64(_SENSE_SLOT_KEY) + np.arange(
        dim, dtype=np.uint64
    )[None, :]
    u = rng.uniform_array(s, keys.ravel()).reshape(len(word_ids), dim)
    return ((u - 0.5) / dim).astype(np.float32)


class WordTable:
    """V x D global word embeddings over a vocabulary."""

    def __init__(self, matrix: np.ndarray, vocab: Vocabulary):
        matrix = np.ascontiguousarray(matrix, dtype=np.float32)
        if matrix.ndim != 2 or matrix.shape[0] != len(vocab):
            raise ValueError(
                f"matrix shape {matrix.shape} does not match vocabulary size {len(vocab)}"
            )
        self.matrix = matrix
        self.vocab = vocab

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def vector(self, word: str | int) -> np.ndarray:
        wid = word if isinstance(word, int) else self.vocab.id_of(word)
        return self.matrix[wid]

    @classmethod
    def random_init(cls, vocab: Vocabulary, dim: int, seed: int) -> "WordTable":
        return cls(init_global_matrix(len(vocab), dim, seed), vocab)

    def copy(self) -> "WordTable":
        return WordTable(self.matrix.copy(), self.vocab)


class SenseTable:
    """Per-word sense slots: embedding, assignment centroid, count.

    Storage is a stacked slot layout: word w owns rows
    offsets[w] .. offsets[w+1]-1 (its capacity); the first n_senses[w] are
    materialized. Words outside the multi-sense set always have capacity 1.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        dim: int,
        offsets: np.ndarray,
        n_senses: np.ndarray,
        emb: np.ndarray,
        assign: np.ndarray,
        counts: np.ndarray,
        multi_sense_ids: Iterable[int],
    ):
        self.vocab = vocab
        self.dim = int(dim)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.n_senses = np.asarray(n_senses, dtype=np.int64)
        self.emb = np.ascontiguousarray(emb, dtype=np.float32)
        self.assign = np.ascontiguousarray(assign, dtype=np.float32)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.multi_sense_ids = frozenset(int(i) for i in multi_sense_ids)
        self.is_multi = np.zeros(len(vocab), dtype=np.uint8)
        for wid in self.multi_sense_ids:
            self.is_multi[wid] = 1

    # -- construction ---------------------------------------------------

    @classmethod
    def _alloc(cls, vocab, dim, capacities, multi_sense_ids):
        offsets = np.zeros(len(vocab) + 1, dtype=np.int64)
        np.cumsum(capacities, out=offsets[1:])
        total = int(offsets[-1])
        return cls(
            vocab,
            dim,
            offsets,
            np.zeros(len(vocab), dtype=np.int64),
            np.zeros((total, dim), dtype=np.float32),
            np.zeros((total, dim), dtype=np.float32),
            np.zeros(total, dtype=np.int64),
            multi_sense_ids,
        )

    @classmethod
    def fixed_init(
        cls,
        vocab: Vocabulary,
        dim: int,
        k: int,
        multi_sense_ids: Iterable[int],
        seed: int,
    ) -> "SenseTable":
        """Fixed-K table: K random-initialized senses per multi-sense word.

        Assignment centroids start at zero, counts at zero.
        """
        multi = frozenset(int(i) for i in multi_sense_ids)
        caps = np.ones(len(vocab), dtype=np.int64)
        for wid in multi:
            caps[wid] = k
        table = cls._alloc(vocab, dim, caps, multi)
        wids, slots = [], []
        for wid in range(len(vocab)):
            for s in range(caps[wid]):
                wids.append(wid)
                slots.append(s)
        table.emb[:] = init_sense_rows(
            seed, np.array(wids, dtype=np.uint64), np.array(slots, dtype=np.uint64), dim
        )
        table.n_senses[:] = caps
        return table

    @classmethod
    def single_init(cls, vocab: Vocabulary, dim: int, seed: int) -> "SenseTable":
        """One sense per word everywhere: the plain skip-gram predictor table."""
        return cls.fixed_init(vocab, dim, k=1, multi_sense_ids=(), seed=seed)

    @classmethod
    def crp_init(
        cls,
        vocab: Vocabulary,
        vectors: np.ndarray,
        multi_sense_ids: Iterable[int],
        cap: int,
    ) -> "SenseTable":
        """CRP table: one zero-count sense per word seeded from `vectors`."""
        multi = frozenset(int(i) for i in multi_sense_ids)
        caps = np.ones(len(vocab), dtype=np.int64)
        for wid in multi:
            caps[wid] = cap
        dim = vectors.shape[1]
        table = cls._alloc(vocab, dim, caps, multi)
        first = table.offsets[:-1]
        table.emb[first] = vectors
        table.assign[first] = vectors
        table.n_senses[:] = 1
        return table

    # -- access ---------------------------------------------------------

    def capacity(self, wid: int) -> int:
        return int(self.offsets[wid + 1] - self.offsets[wid])

    def n_senses_of(self, word: str | int) -> int:
        wid = word if isinstance(word, int) else self.vocab.id_of(word)
        return int(self.n_senses[wid])

    def slot(self, wid: int, k: int) -> int:
        if k >= self.n_senses[wid]:
            raise IndexError(f"word {wid} has {self.n_senses[wid]} senses, asked {k}")
        return int(self.offsets[wid]) + k

    def embedding(self, word: str | int, k: int) -> np.ndarray:
        wid = word if isinstance(word, int) else self.vocab.id_of(word)
        return self.emb[self.slot(wid, k)]

    def assign_centroid(self, word: str | int, k: int) -> np.ndarray:
        wid = word if isinstance(word, int) else self.vocab.id_of(word)
        return self.assign[self.slot(wid, k)]

    def count(self, word: str | int, k: int) -> int:
        wid = word if isinstance(word, int) else self.vocab.id_of(word)
        return int(self.counts[self.slot(wid, k)])

    def senses(self, word: str | int) -> list[tuple[np.ndarray, np.ndarray, int]]:
        """(embedding, assignment centroid, count) per materialized sense."""
        wid = word if isinstance(word, int) else self.vocab.id_of(word)
        return [
            (self.emb[s], self.assign[s], int(self.counts[s]))
            for s in range(self.offsets[wid], self.offsets[wid] + self.n_senses[wid])
        ]

    def create_sense(self, wid: int, values: np.ndarray) -> int:
        """Materialize a new sense at `values`; returns its index."""
        k = int(self.n_senses[wid])
        if k >= self.capacity(wid):
            raise ValueError(f"word {wid} is at its sense capacity {k}")
        s = int(self.offsets[wid]) + k
        self.emb[s] = values
        self.assign[s] = values
        self.counts[s] = 0
        self.n_senses[wid] = k + 1
        return k

    def first_sense_vectors(self) -> np.ndarray:
        """The slot-0 embedding of every word as a (V, D) matrix."""
        return self.emb[self.offsets[:-1]].copy()

    def copy(self) -> "SenseTable":
        return SenseTable(
            self.vocab,
            self.dim,
            self.offsets.copy(),
            self.n_senses.copy(),
            self.emb.copy(),
            self.assign.copy(),
            self.counts.copy(),
            self.multi_sense_ids,
        )


# -- binary persistence ----------------------------------------------------


def _read_exact(f, n: int, path) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise TableFormatError(
            f"{path}: truncated at byte {f.tell()}: wanted {n} bytes, got {len(data)}"
        )
    return data


def save_tables(word_table: WordTable, sense_table: SenseTable, path) -> None:
    """Write both tables (plus the vocabulary) to one binary file."""
    vocab = word_table.vocab
    if sense_table.vocab is not vocab and sense_table.vocab != vocab:
        raise ValueError("word table and sense table have different vocabularies")
    v, d = word_table.matrix.shape
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<IIQQ", v, d, vocab.total_tokens, vocab.pruned_tokens))
        for surface, count in vocab.entries:
            raw = surface.encode("utf-8")
            f.write(struct.pack("<I", len(raw)))
            f.write(raw)
            f.write(struct.pack("<Q", count))
        f.write(word_table.matrix.astype("<f4", copy=False).tobytes())
        multi = sorted(sense_table.multi_sense_ids)
        f.write(struct.pack("<I", len(multi)))
        f.write(np.array(multi, dtype="<u4").tobytes())
        for wid in range(v):
            n = int(sense_table.n_senses[wid])
            f.write(struct.pack("<II", sense_table.capacity(wid), n))
            base = int(sense_table.offsets[wid])
            for k in range(n):
                f.write(sense_table.emb[base + k].astype("<f4", copy=False).tobytes())
                f.write(sense_table.assign[base + k].astype("<f4", copy=False).tobytes())
                f.write(struct.pack("<Q", int(sense_table.counts[base + k])))


def load_tables(path) -> tuple[WordTable, SenseTable]:
    with open(path, "rb") as f:
        magic = _read_exact(f, len(MAGIC), path)
        if magic != MAGIC:
            raise TableFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
        v, d, total, pruned = struct.unpack("<IIQQ", _read_exact(f, 24, path))
        entries = []
        for _ in range(v):
            (slen,) = struct.unpack("<I", _read_exact(f, 4, path))
            surface = _read_exact(f, slen, path).decode("utf-8")
            (count,) = struct.unpack("<Q", _read_exact(f, 8, path))
            entries.append((surface, count))
        vocab = Vocabulary(entries, total_tokens=total, pruned_tokens=pruned)
        matrix = np.frombuffer(
            _read_exact(f, v * d * 4, path), dtype="<f4"
        ).reshape(v, d)
        word_table = WordTable(matrix.copy(), vocab)
        (n_multi,) = struct.unpack("<I", _read_exact(f, 4, path))
        multi = np.frombuffer(_read_exact(f, 4 * n_multi, path), dtype="<u4")
        caps = np.empty(v, dtype=np.int64)
        per_word = []
        for wid in range(v):
            cap, n = struct.unpack("<II", _read_exact(f, 8, path))
            caps[wid] = cap
            rows = []
            for _ in range(n):
                e = np.frombuffer(_read_exact(f, d * 4, path), dtype="<f4")
                a = np.frombuffer(_read_exact(f, d * 4, path), dtype="<f4")
                (c,) = struct.unpack("<Q", _read_exact(f, 8, path))
                rows.append((e, a, c))
            per_word.append(rows)
        extra = f.read(1)
        if extra:
            raise TableFormatError(f"{path}: trailing bytes at offset {f.tell() - 1}")
    table = SenseTable._alloc(vocab, d, caps, (int(i) for i in multi))
    for wid, rows in enumerate(per_word):
        base = int(table.offsets[wid])
        table.n_senses[wid] = len(rows)
        for k, (e, a, c) in enumerate(rows):
            table.emb[base + k] = e
            table.assign[base + k] = a
            table.counts[base + k] = c
    return word_table, table


# -- text persistence -------------------------------------------------------


def _fmt(x: np.float32) -> str:
    # 9 significant digits round-trip any float32 and re-format identically
    return f"{float(x):.9g}"


def save_word_text(word_table: WordTable, path) -> None:
    """Interchange text format: header "V D", then "surface v_1 .. v_D"."""
    v, d = word_table.matrix.shape
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{v} {d}\n")
        for wid in range(v):
            row = " ".join(_fmt(x) for x in word_table.matrix[wid])
            f.write(f"{word_table.vocab.surface(wid)} {row}\n")


def load_word_text(path) -> WordTable:
    """Load the word text format.

    Text files carry no corpus statistics; the reconstructed vocabulary has
    zero counts and file order. Use the binary format for lossless storage.
    """
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise TableFormatError(f"{path}:1: expected header 'V D'")
        v, d = int(header[0]), int(header[1])
        surfaces, rows = [], []
        for lineno, line in enumerate(f, start=2):
            parts = line.split()
            if len(parts) != d + 1:
                raise TableFormatError(
                    f"{path}:{lineno}: expected surface + {d} values, got {len(parts)} fields"
                )
            surfaces.append(parts[0])
            rows.append(np.array([np.float32(x) for x in parts[1:]], dtype=np.float32))
    if len(rows) != v:
        raise TableFormatError(f"{path}: header declares {v} rows, file has {len(rows)}")
    vocab = Vocabulary([(s, 0) for s in surfaces], total_tokens=0, pruned_tokens=0)
    return WordTable(np.vstack(rows) if rows else np.zeros((0, d), np.float32), vocab)


def save_sense_text(sense_table: SenseTable, path) -> None:
    """Interchange text format: header "W D", then "surface#k n_k v_1 .. v_D".

    Only sense embeddings and counts are written (assignment centroids and
    capacities are not part of the interchange format).
    """
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(sense_table.vocab)} {sense_table.dim}\n")
        for wid in range(len(sense_table.vocab)):
            surface = sense_table.vocab.surface(wid)
            base = int(sense_table.offsets[wid])
            for k in range(int(sense_table.n_senses[wid])):
                row = " ".join(_fmt(x) for x in sense_table.emb[base + k])
                f.write(f"{surface}#{k + 1} {int(sense_table.counts[base + k])} {row}\n")


def load_sense_text(path) -> SenseTable:
    """Load the sense text format (lossy: assignment centroids come back zero)."""
    with open(path, encoding="utf-8") as f:
        header = f.readline().split()
        if len(header) != 2:
            raise TableFormatError(f"{path}:1: expected header 'W D'")
        w, d = int(header[0]), int(header[1])
        per_word: dict[str, list[tuple[int, int, np.ndarray]]] = {}
        order: list[str] = []
        for lineno, line in enumerate(f, start=2):
            parts = line.split()
            if len(parts) != d + 2 or "#" not in parts[0]:
                raise TableFormatError(
                    f"{path}:{lineno}: expected 'surface#k n_k' + {d} values"
                )
            surface, k_str = parts[0].rsplit("#", 1)
            vec = np.array([np.float32(x) for x in parts[2:]], dtype=np.float32)
            if surface not in per_word:
                per_word[surface] = []
                order.append(surface)
            per_word[surface].append((int(k_str), int(parts[1]), vec))
    if len(order) != w:
        raise TableFormatError(f"{path}: header declares {w} words, file has {len(order)}")
    vocab = Vocabulary([(s, 0) for s in order], total_tokens=0, pruned_tokens=0)
    caps = np.array([len(per_word[s]) for s in order], dtype=np.int64)
    multi = [i for i, s in enumerate(order) if len(per_word[s]) > 1]
    table = SenseTable._alloc(vocab, d, caps, multi)
    for wid, s in enumerate(order):
        base = int(table.offsets[wid])
        senses = sorted(per_word[s])
        table.n_senses[wid] = len(senses)
        for j, (_, n_k, vec) in enumerate(senses):
            table.emb[base + j] = vec
            table.counts[base + j] = n_k
    return table
