"""Counter-based deterministic random streams.

Every stochastic decision in training (frequent-word subsampling, dynamic
window shrinking, negative sampling, CRP sense sampling) reads from its own
splitmix64 counter stream, so each decision is a pure function of
(seed, stream tag, index). Runs are replayable without recording RNG state,
and unrelated decisions cannot perturb each other's streams.

Three equivalent implementations are provided and cross-checked by tests:
an njit scalar for the training kernels, a vectorized numpy form for bulk
draws, and a thin Python facade (`CounterStream`) mimicking the parts of
the numpy Generator API the library consumes.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64

GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TAG_SALT = 0xD1342543DE82EF95

# stream tags
SUBSAMPLE = 1
WINDOW = 2
NEGATIVE = 3
CRP = 4
INIT_GLOBAL = 5
INIT_SENSE = 6

_U64 = np.uint64
_INV_2_64 = 2.0**-64


@njit(cache=True)
def mix64(z):
    """splitmix64 step: add the golden-ratio increment, then finalize."""
    z = uint64(z) + uint64(GOLDEN)
    z = (z ^ (z >> uint64(30))) * uint64(_MIX1)
    z = (z ^ (z >> uint64(27))) * uint64(_MIX2)
    return z ^ (z >> uint64(31))


@njit(cache=True)
def stream_value(seed, index):
    return mix64(uint64(seed) + (uint64(index) + uint64(1)) * uint64(GOLDEN))


@njit(cache=True)
def stream_uniform(seed, index):
    """Uniform float64 in [0, 1) at position `index` of stream `seed`."""
    return stream_value(seed, index) * _INV_2_64


def _mix64_np(z: np.ndarray) -> np.ndarray:
    z = z + _U64(GOLDEN)
    z = (z ^ (z >> _U64(30))) * _U64(_MIX1)
    z = (z ^ (z >> _U64(27))) * _U64(_MIX2)
    return z ^ (z >> _U64(31))


def mix64_py(z) -> np.uint64:
    # route scalars through a 1-element array: numpy scalar overflow warns,
    # array wraparound does not
    return _mix64_np(np.array([z], dtype=np.uint64))[0]


def stream_seed(seed: int, tag: int, epoch: int = 0) -> np.uint64:
    """Derive the uint64 seed of one named stream of a run."""
    z = np.array([seed % 2**64], dtype=np.uint64)
    s = mix64_py((z ^ (np.array([tag], dtype=np.uint64) * _U64(_TAG_SALT)))[0])
    if epoch:
        s = mix64_py((np.array([s], dtype=np.uint64) ^ (np.array([epoch], dtype=np.uint64) * _U64(_MIX1)))[0])
    return s


def uniform_array(seed: np.uint64, indices: np.ndarray) -> np.ndarray:
    """Vectorized stream_uniform over an array of stream positions."""
    z = (indices.astype(np.uint64) + _U64(1)) * _U64(GOLDEN) + _U64(seed)
    return _mix64_np(z) * _INV_2_64


class CounterStream:
    """Sequential facade over one stream; numpy-Generator-like surface."""

    __slots__ = ("seed", "index")

    def __init__(self, seed: int, tag: int, epoch: int = 0, start: int = 0):
        self.seed = stream_seed(seed, tag, epoch)
        self.index = start

    def random(self) -> float:
        u = uniform_array(self.seed, np.array([self.index]))[0]
        self.index += 1
        return float(u)

    def integers(self, low: int, high: int) -> int:
        """low + floor(u * (high - low)); matches the training kernels."""
        if high <= low:
            raise ValueError(f"empty integer range [{low}, {high})")
        return int(low + int(self.random() * (high - low)))
