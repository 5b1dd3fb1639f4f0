"""Counter-based random streams.

Every random draw in the package is a pure function of ``(seed, replicate,
position)``, so results never depend on how replicates are scheduled across
threads.  Gaussian draws come from numpy's Philox generator keyed by
``(seed, replicate)``; random-walk steps use a SplitMix64-style hash of
``(seed, replicate, block)`` that can be evaluated inside numba kernels.
"""

from __future__ import annotations

import numba as nb
import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB


def _mix_int(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *words: int) -> int:
    """Hash ``seed`` with extra integers into an independent 64-bit seed."""
    z = _mix_int(seed)
    for w in words:
        z = _mix_int(z + _GOLDEN + _mix_int(w))
    return z


def stream(seed: int, replicate: int) -> np.random.Generator:
    """Gaussian-capable generator for one replicate."""
    return np.random.Generator(np.random.Philox(key=[seed & MASK64, replicate & MASK64]))


@nb.njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> nb.uint64(30))) * nb.uint64(_M1)
    z = (z ^ (z >> nb.uint64(27))) * nb.uint64(_M2)
    return z ^ (z >> nb.uint64(31))


@nb.njit(cache=True)
def counter_word(seed, replicate, block):
    """64 random bits for ``(seed, replicate, block)``; inputs are uint64."""
    k = _mix64(seed + _mix64(replicate + nb.uint64(_GOLDEN)))
    return _mix64(k + (block + nb.uint64(1)) * nb.uint64(_GOLDEN))


def counter_words(seed: int, replicates, blocks) -> np.ndarray:
    """Vectorised numpy twin of :func:`counter_word` (used to cross-check the kernel)."""
    with np.errstate(over="ignore"):
        def mix(z):
            z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
            return z ^ (z >> np.uint64(31))

        r = np.asarray(replicates, dtype=np.uint64)
        b = np.asarray(blocks, dtype=np.uint64)
        k = mix(np.uint64(seed & MASK64) + mix(r + np.uint64(_GOLDEN)))
        return mix(k + (b + np.uint64(1)) * np.uint64(_GOLDEN))
