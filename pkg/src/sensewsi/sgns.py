"""Skip-gram negative-sampling objective, gradient step, noise sampler.

The predictor vector (a sense embedding during training) is pushed to score
its true context word above `negatives` noise words:

    L = -log sigmoid(u_pos . v) - sum_n log sigmoid(-u_n . v)

`sgns_step` is the one implementation of the gradient update; the training
kernel calls the same njit function, so "what a step does" is defined in
exactly one place. `sgns_loss` is an independent numpy evaluation of L used
by tests as the finite-difference oracle against the step.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numba import njit

from . import rng


@njit(cache=True)
def find_first_greater(cum, x):
    """First index i with cum[i] > x (cum ascending)."""
    lo, hi = 0, cum.shape[0]
    while lo < hi:
        mid = (lo + hi) // 2
        if cum[mid] > x:
            hi = mid
        else:
            lo = mid + 1
    return lo


@njit(cache=True)
def pair_update(pred, table, positive, negatives, lr, grad_out):
    """One SGNS gradient step on (pred, table rows); returns the pre-step loss.

    All gradients are evaluated at the incoming values: row updates are
    applied immediately from the captured predictor, the predictor update is
    accumulated in `grad_out` (a float64 scratch of dim D) and applied last.
    """
    d = pred.shape[0]
    for j in range(d):
        grad_out[j] = 0.0
    loss = 0.0
    for s in range(negatives.shape[0] + 1):
        if s == 0:
            target = positive
            label = 1.0
        else:
            target = negatives[s - 1]
            label = 0.0
        dot = 0.0
        for j in range(d):
            dot += np.float64(table[target, j]) * np.float64(pred[j])
        sig = 1.0 / (1.0 + np.exp(-dot))
        if label == 1.0:
            loss += -np.log(sig) if sig > 0.0 else 745.0
        else:
            loss += -np.log(1.0 - sig) if sig < 1.0 else 745.0
        g = lr * (label - sig)
        for j in range(d):
            grad_out[j] += g * np.float64(table[target, j])
            # store-rounding keeps float32 tables deterministic and float64
            # tables (gradient checks) at full precision
            table[target, j] += g * np.float64(pred[j])
    for j in range(d):
        pred[j] += grad_out[j]
    return loss


def sgns_loss(predictor, positive: int, negatives: Sequence[int], table) -> float:
    """L = -log s(u_pos.v) - sum_n log s(-u_n.v), evaluated in float64."""
    matrix = getattr(table, "matrix", table)
    v = np.asarray(predictor, dtype=np.float64)
    u_pos = np.asarray(matrix[positive], dtype=np.float64)
    loss = float(np.logaddexp(0.0, -np.dot(u_pos, v)))
    for n in negatives:
        loss += float(np.logaddexp(0.0, np.dot(np.asarray(matrix[n], np.float64), v)))
    return loss


def sgns_step(predictor, positive: int, negatives: Sequence[int], table, lr: float) -> None:
    """Apply -lr * grad(L) to the predictor and the involved table rows."""
    if lr <= 0.0:
        raise ValueError(f"lr must be > 0, got {lr}")
    negatives = np.asarray(negatives, dtype=np.int64)
    if negatives.size == 0:
        raise ValueError("negatives must be non-empty")
    if np.any(negatives == positive):
        raise ValueError("negatives must be distinct from the positive word")
    matrix = getattr(table, "matrix", table)
    scratch = np.empty(predictor.shape[0], dtype=np.float64)
    pair_update(predictor, matrix, positive, negatives, lr, scratch)


class NegativeSampler:
    """Noise-word sampler with mass proportional to count**exponent.

    Draw i of a given seed is a pure function of (seed, i): the sampler keeps
    a draw counter, and every attempt (including collision retries) consumes
    one position of its stream.
    """

    def __init__(self, counts, seed: int, exponent: float = 0.75):
        counts = np.asarray(counts, dtype=np.float64)
        if counts.ndim != 1 or len(counts) < 1:
            raise ValueError("counts must be a non-empty 1-d array")
        if np.any(counts <= 0):
            raise ValueError("all counts must be positive")
        mass = counts**exponent
        cum = np.cumsum(mass)
        cum /= cum[-1]
        cum[-1] = 1.0
        self.cum = cum
        self.seed = seed
        self.stream = rng.stream_seed(seed, rng.NEGATIVE)
        self.index = 0

    def __len__(self) -> int:
        return len(self.cum)

    def probabilities(self) -> np.ndarray:
        return np.diff(self.cum, prepend=0.0)

    def draw(self, exclude: int | None = None) -> int:
        if exclude is not None and len(self.cum) < 2:
            raise ValueError("cannot exclude from a vocabulary of size 1")
        while True:
            u = rng.stream_uniform(self.stream, np.uint64(self.index))
            self.index += 1
            wid = int(find_first_greater(self.cum, u))
            if wid != exclude:
                return wid

    def reset(self) -> None:
        self.index = 0


def draw_negatives(sampler: NegativeSampler, count: int, exclude: int | None) -> list[int]:
    """`count` noise ids, none equal to `exclude` (resample on collision)."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if len(sampler) < 2:
        raise ValueError("negative sampling needs a vocabulary of size >= 2")
    return [sampler.draw(exclude) for _ in range(count)]
