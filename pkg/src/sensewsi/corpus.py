"""Corpus streaming: tokenization, vocabulary, subsampling, windows.

A corpus is UTF-8 plain text, one sentence (or document) per line; windows
never cross lines. Tokenization is whitespace splitting after lowercasing
and stripping non-alphanumeric edge punctuation.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import rng


class EmptyCorpusError(ValueError):
    """A token stream or corpus file yielded no tokens."""


class VocabularyFormatError(ValueError):
    """A vocabulary file failed to parse; message carries path:line."""


def normalize_token(token: str) -> str:
    """Lowercase and strip non-alphanumeric edge characters.

    Interior punctuation survives ("don't", "co-op"); an all-punctuation
    token normalizes to the empty string.
    """
    t = token.lower()
    start, end = 0, len(t)
    while start < end and not t[start].isalnum():
        start += 1
    while end > start and not t[end - 1].isalnum():
        end -= 1
    return t[start:end]


def tokenize(line: str) -> list[str]:
    """Split one line (= one sentence) into normalized tokens."""
    out = []
    for tok in line.split():
        n = normalize_token(tok)
        if n:
            out.append(n)
    return out


class Vocabulary:
    """Frequency-ranked surface <-> dense-id map.

    Ids are 0..V-1 in non-increasing count order, ties broken
    lexicographically. ``total_tokens`` counts every token seen at build
    time; occurrences of words pruned by min_count are kept in
    ``pruned_tokens`` so the two always sum to ``total_tokens``.
    """

    __slots__ = ("entries", "index", "total_tokens", "pruned_tokens")

    def __init__(
        self,
        entries: Iterable[tuple[str, int]],
        total_tokens: int,
        pruned_tokens: int = 0,
    ):
        self.entries: list[tuple[str, int]] = [(s, int(c)) for s, c in entries]
        self.index: dict[str, int] = {s: i for i, (s, _) in enumerate(self.entries)}
        self.total_tokens = int(total_tokens)
        self.pruned_tokens = int(pruned_tokens)
        if len(self.index) != len(self.entries):
            raise ValueError("duplicate surface forms in vocabulary")
        retained = sum(c for _, c in self.entries)
        if retained + self.pruned_tokens != self.total_tokens:
            raise ValueError(
                f"vocabulary counts inconsistent: {retained} retained + "
                f"{self.pruned_tokens} pruned != {self.total_tokens} total"
            )

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, surface: str) -> bool:
        return surface in self.index

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Vocabulary)
            and self.entries == other.entries
            and self.total_tokens == other.total_tokens
            and self.pruned_tokens == other.pruned_tokens
        )

    @property
    def retained_tokens(self) -> int:
        return self.total_tokens - self.pruned_tokens

    def surface(self, word_id: int) -> str:
        return self.entries[word_id][0]

    def count(self, word_id: int) -> int:
        return self.entries[word_id][1]

    def id_of(self, surface: str) -> int:
        return self.index[surface]

    def get(self, surface: str, default: int = -1) -> int:
        return self.index.get(surface, default)

    def frequency(self, word_id: int) -> float:
        """Relative frequency among retained tokens, in (0, 1]."""
        return self.entries[word_id][1] / self.retained_tokens

    def counts_array(self) -> np.ndarray:
        return np.array([c for _, c in self.entries], dtype=np.int64)

    def top_ids(self, n: int) -> range:
        """The n most frequent word ids (a prefix, by construction)."""
        return range(min(n, len(self.entries)))


def build_vocab(token_stream: Iterable[str], min_count: int = 5) -> Vocabulary:
    """Count a token stream and freeze it into a Vocabulary.

    Words with count < min_count are excluded; their occurrences are
    recorded as pruned. Raises EmptyCorpusError on an empty stream.
    """
    if min_count < 1:
        raise ValueError(f"min_count must be >= 1, got {min_count}")
    counts = Counter(token_stream)
    total = sum(counts.values())
    if total == 0:
        raise EmptyCorpusError("token stream is empty")
    kept = sorted(
        ((s, c) for s, c in counts.items() if c >= min_count),
        key=lambda sc: (-sc[1], sc[0]),
    )
    retained = sum(c for _, c in kept)
    return Vocabulary(kept, total_tokens=total, pruned_tokens=total - retained)


def save_vocab(vocab: Vocabulary, path) -> None:
    """Write the vocabulary file: "V total_tokens" then "surface count"."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"{len(vocab)} {vocab.total_tokens}\n")
        for surface, count in vocab.entries:
            f.write(f"{surface} {count}\n")


def load_vocab(path) -> Vocabulary:
    with open(path, encoding="utf-8") as f:
        header = f.readline()
        try:
            v_str, total_str = header.split()
            v, total = int(v_str), int(total_str)
        except ValueError:
            raise VocabularyFormatError(
                f"{path}:1: expected header 'V total_tokens', got {header!r}"
            ) from None
        entries = []
        for lineno, line in enumerate(f, start=2):
            parts = line.split()
            if len(parts) != 2:
                raise VocabularyFormatError(
                    f"{path}:{lineno}: expected 'surface count', got {line!r}"
                )
            try:
                entries.append((parts[0], int(parts[1])))
            except ValueError:
                raise VocabularyFormatError(
                    f"{path}:{lineno}: count is not an integer: {parts[1]!r}"
                ) from None
    if len(entries) != v:
        raise VocabularyFormatError(
            f"{path}: header declares {v} entries, file has {len(entries)}"
        )
    retained = sum(c for _, c in entries)
    return Vocabulary(entries, total_tokens=total, pruned_tokens=total - retained)


def subsample_keep_prob(word_freq: float, threshold: float | None) -> float:
    """Keep probability for a word of relative frequency ``word_freq``.

    p = (sqrt(f/t) + 1) * (t/f), clamped to [0, 1]. A threshold of None or
    +inf disables subsampling (p = 1 for every word).
    """
    if word_freq <= 0.0 or word_freq > 1.0:
        raise ValueError(f"word_freq must be in (0, 1], got {word_freq}")
    if threshold is None or math.isinf(threshold):
        return 1.0
    if threshold <= 0.0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    ratio = threshold / word_freq
    return min(1.0, (math.sqrt(word_freq / threshold) + 1.0) * ratio)


def keep_probs(vocab: Vocabulary, threshold: float | None) -> np.ndarray:
    """Per-word-id keep probabilities as a float64 array."""
    out = np.ones(len(vocab), dtype=np.float64)
    if threshold is None or math.isinf(threshold):
        return out
    for wid in range(len(vocab)):
        out[wid] = subsample_keep_prob(vocab.frequency(wid), threshold)
    return out


def subsample_keep(stream_seed: np.uint64, position: int, keep_prob: float) -> bool:
    """Pure keep/drop decision for the token at a corpus position."""
    return bool(
        rng.uniform_array(stream_seed, np.array([position]))[0] < keep_prob
    )


@dataclass(frozen=True)
class Window:
    """One training target with its (possibly shrunk) symmetric context."""

    target: int
    context: tuple[int, ...]
    position: int
    effective_size: int


def extract_windows(
    sentence: Sequence[int],
    window_size: int,
    rng_like,
    offsets: Sequence[int] | None = None,
) -> list[Window]:
    """One Window per token, with a dynamic size drawn uniformly in 1..window_size.

    ``rng_like`` needs an ``integers(low, high)`` method (numpy Generator or
    rng.CounterStream); one draw is consumed per token, in order.
    ``offsets`` supplies each token's corpus offset (defaults to 0..n-1).
    """
    if window_size < 1:
        raise ValueError(f"window_size must be >= 1, got {window_size}")
    n = len(sentence)
    out = []
    for i in range(n):
        b = int(rng_like.integers(1, window_size + 1))
        lo = max(0, i - b)
        context = tuple(sentence[lo:i]) + tuple(sentence[i + 1 : i + 1 + b])
        pos = int(offsets[i]) if offsets is not None else i
        out.append(Window(int(sentence[i]), context, pos, b))
    return out


class EncodedCorpus:
    """In-vocabulary token ids with sentence boundaries, held in memory.

    Token positions ("corpus offsets") index the encoded stream: tokens
    dropped at tokenization or pruned from the vocabulary do not occupy
    positions.
    """

    def __init__(self, ids: np.ndarray, sentence_offsets: np.ndarray, vocab: Vocabulary):
        self.ids = np.asarray(ids, dtype=np.int32)
        self.sentence_offsets = np.asarray(sentence_offsets, dtype=np.int64)
        self.vocab = vocab

    @property
    def n_tokens(self) -> int:
        return len(self.ids)

    @property
    def n_sentences(self) -> int:
        return len(self.sentence_offsets) - 1

    def sentence(self, i: int) -> np.ndarray:
        return self.ids[self.sentence_offsets[i] : self.sentence_offsets[i + 1]]

    def iter_sentences(self) -> Iterator[np.ndarray]:
        for i in range(self.n_sentences):
            yield self.sentence(i)

    @classmethod
    def from_lines(
        cls, lines: Sequence[str], vocab: Vocabulary | None = None, min_count: int = 5
    ) -> "EncodedCorpus":
        if vocab is None:
            vocab = build_vocab(
                (tok for line in lines for tok in tokenize(line)), min_count
            )
        ids: list[int] = []
        offsets = [0]
        index = vocab.index
        for line in lines:
            start = len(ids)
            for tok in tokenize(line):
                wid = index.get(tok)
                if wid is not None:
                    ids.append(wid)
            if len(ids) > start:
                offsets.append(len(ids))
        if not ids:
            raise EmptyCorpusError("no in-vocabulary tokens in corpus")
        return cls(
            np.array(ids, dtype=np.int32), np.array(offsets, dtype=np.int64), vocab
        )

    @classmethod
    def from_file(
        cls, path, vocab: Vocabulary | None = None, min_count: int = 5
    ) -> "EncodedCorpus":
        if vocab is None:
            with open(path, encoding="utf-8") as f:
                vocab = build_vocab(
                    (tok for line in f for tok in tokenize(line)), min_count
                )
        with open(path, encoding="utf-8") as f:
            return cls.from_lines(list(f), vocab=vocab)
