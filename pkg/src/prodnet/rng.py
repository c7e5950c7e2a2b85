"""Reproducible random-number streams for path simulation.

Each Monte Carlo sample owns an independent xoshiro256++ stream whose state
is derived from ``(master_seed, sample_index)`` by a fixed SplitMix64 mix,
so any single sample can be recomputed in isolation and results do not
depend on execution order or thread count.

Derivation (all arithmetic mod 2**64)::

    z0      = master_seed + (sample_index + 1) * 0x9E3779B97F4A7C15
    state_k = splitmix64(z0 advanced k+1 times),  k = 0..3

The generator functions are numba-compiled and operate on a ``uint64[4]``
state array in place; they behave identically with the JIT disabled.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64

GOLDEN = U64(0x9E3779B97F4A7C15)
_SM_MUL1 = U64(0xBF58476D1CE4E5B9)
_SM_MUL2 = U64(0x94D049BB133111EB)


@njit(cache=True, nogil=True)
def _splitmix64(z):
    z = z + GOLDEN
    x = z
    x = (x ^ (x >> U64(30))) * _SM_MUL1
    x = (x ^ (x >> U64(27))) * _SM_MUL2
    x = x ^ (x >> U64(31))
    return x, z


@njit(cache=True, nogil=True)
def seed_state(state, master_seed, index):
    """Fill ``state`` (uint64[4]) for stream ``index`` of ``master_seed``.

    ``index = -1`` denotes the root stream of the seed itself.
    """
    z = master_seed + U64(index + 1) * GOLDEN
    nonzero = False
    for k in range(4):
        x, z = _splitmix64(z)
        state[k] = x
        if x != U64(0):
            nonzero = True
    if not nonzero:  # xoshiro must not start at the all-zero state
        state[0] = GOLDEN


@njit(cache=True, nogil=True, inline="always")
def next_u64(state):
    # xoshiro256++ (Blackman & Vigna), state updated in place.
    r = state[0] + state[3]
    result = ((r << U64(23)) | (r >> U64(41))) + state[0]
    t = state[1] << U64(17)
    state[2] ^= state[0]
    state[3] ^= state[1]
    state[1] ^= state[2]
    state[0] ^= state[3]
    state[2] ^= t
    state[3] = (state[3] << U64(45)) | (state[3] >> U64(19))
    return result


@njit(cache=True, nogil=True, inline="always")
def next_u01(state):
    # Strictly inside (0, 1): 53-bit mantissa offset by half an ulp.
    return (np.float64(next_u64(state) >> U64(11)) + 0.5) * (2.0**-53)


@njit(cache=True, nogil=True, inline="always")
def next_exponential(state, rate):
    # Inverse CDF; u < 1 strictly, so the draw is finite and positive.
    return -np.log1p(-next_u01(state)) / rate


class RngStream:
    """Handle over a uint64[4] xoshiro256++ state.

    Identical seeds yield identical draw sequences; streams for distinct
    sample indices are statistically independent.
    """

    __slots__ = ("state",)

    def __init__(self, state: np.ndarray):
        if state.dtype != np.uint64 or state.shape != (4,):
            raise ValueError("rng state must be uint64[4]")
        self.state = state

    @classmethod
    def from_seed(cls, seed: int) -> "RngStream":
        return cls.for_sample(seed, -1)

    @classmethod
    def for_sample(cls, seed: int, index: int) -> "RngStream":
        state = np.empty(4, dtype=np.uint64)
        seed_state(state, U64(seed % (1 << 64)), np.int64(index))
        return cls(state)

    def u01(self) -> float:
        return float(next_u01(self.state))

    def exponential(self, rate: float) -> float:
        if rate <= 0.0:
            raise ValueError("rate must be positive")
        return float(next_exponential(self.state, rate))

    def integers(self, bound: int) -> int:
        """Uniform integer in [0, bound) by rejection-free modulo of 64 bits."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return int(next_u64(self.state) % U64(bound))

    def copy(self) -> "RngStream":
        return RngStream(self.state.copy())


def derive_seed(master_seed: int, salt: int) -> int:
    """Mix a salt into a master seed (used for independent-seed grid scans)."""
    z = U64(master_seed % (1 << 64)) + U64(salt + 1) * GOLDEN
    x, _ = _splitmix64(z)
    return int(x)
