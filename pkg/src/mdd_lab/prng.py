"""Fixed, documented pseudo-random number generation.

All stochastic code in this package draws from xoshiro256** seeded through
SplitMix64, implemented here from the published reference algorithms. Using
one fixed generator (instead of platform RNGs) makes every stream
bit-reproducible across machines and Python versions.

Conventions, fixed so that independently written code can replay streams:

* ``uniform`` takes the top 53 bits of one 64-bit output: ``(u >> 11) * 2**-53``,
  giving a double in ``[0, 1)``.
* ``normal`` is Box-Muller on one uniform pair; the first uniform is shifted
  into ``(0, 1]`` so the logarithm is finite. The cosine value is returned
  first, the sine value is cached for the next call.
* ``randrange(n)`` is ``next_u64() % n``. The modulo bias is below ``n / 2**64``
  and irrelevant at desk scale.
* A Rademacher sign is the top bit of one 64-bit output: ``+1`` if set else ``-1``.
* Independent streams (for Monte-Carlo trials, model inits, per-step batches)
  are derived with :func:`derive_seed`, never by splitting one stream.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a SplitMix64 state once; return ``(new_state, output)``."""
    state = (state + _GOLDEN) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    z = z ^ (z >> 31)
    return state, z


def derive_seed(seed: int, *tags: int) -> int:
    """Derive an independent stream seed from a base seed and integer tags.

    Each tag is folded in as ``splitmix64(seed XOR tag * golden)``; the chain
    makes ``derive_seed(s, a, b)`` differ from ``derive_seed(s, b, a)``.
    Streams for distinct tag tuples are treated as independent.
    """
    s = seed & MASK64
    for t in tags:
        _, s = splitmix64(s ^ ((t * _GOLDEN) & MASK64))
    return s


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256StarStar:
    """Scalar xoshiro256** generator with the conventions documented above."""

    def __init__(self, seed: int):
        s = seed & MASK64
        state = []
        for _ in range(4):
            s, z = splitmix64(s)
            state.append(z)
        self._s = state
        self._cached_normal: float | None = None

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & MASK64, 7) * 9) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        """One double in [0, 1)."""
        return (self.next_u64() >> 11) * 2.0**-53

    def normal(self) -> float:
        """One standard normal draw (Box-Muller, pair cached)."""
        if self._cached_normal is not None:
            g = self._cached_normal
            self._cached_normal = None
            return g
        u1 = ((self.next_u64() >> 11) + 1) * 2.0**-53  # (0, 1]
        u2 = (self.next_u64() >> 11) * 2.0**-53  # [0, 1)
        r = math.sqrt(-2.0 * math.log(u1))
        theta = 2.0 * math.pi * u2
        self._cached_normal = r * math.sin(theta)
        return r * math.cos(theta)

    def randrange(self, n: int) -> int:
        """Integer in [0, n)."""
        if n <= 0:
            raise ValueError("randrange needs n >= 1")
        return self.next_u64() % n

    def sign(self) -> float:
        """One Rademacher sign in {-1.0, +1.0}."""
        return 1.0 if (self.next_u64() >> 63) else -1.0

    def normals(self, shape: int | tuple[int, ...]) -> np.ndarray:
        """Array of standard normals, filled in C (row-major) order."""
        out = np.empty(shape, dtype=np.float64)
        flat = out.reshape(-1)
        for i in range(flat.size):
            flat[i] = self.normal()
        return out

    def uniforms(self, shape: int | tuple[int, ...]) -> np.ndarray:
        out = np.empty(shape, dtype=np.float64)
        flat = out.reshape(-1)
        for i in range(flat.size):
            flat[i] = self.uniform()
        return out

    def integers(self, n: int, size: int) -> np.ndarray:
        """``size`` integers in [0, n), drawn sequentially."""
        return np.array([self.randrange(n) for _ in range(size)], dtype=np.int64)


# Vectorised per-stream arithmetic. Streams are laid out along the last axis;
# numpy uint64 ops wrap modulo 2**64 exactly like the scalar code.

_U = np.uint64


def _splitmix64_vec(state: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    state = state + _U(_GOLDEN)
    z = state.copy()
    z = (z ^ (z >> _U(30))) * _U(_MIX1)
    z = (z ^ (z >> _U(27))) * _U(_MIX2)
    z = z ^ (z >> _U(31))
    return state, z


class _XoshiroVec:
    """Many xoshiro256** streams advanced in lockstep (one per trial)."""

    def __init__(self, seeds: np.ndarray):
        s = seeds.astype(np.uint64)
        words = []
        for _ in range(4):
            s, z = _splitmix64_vec(s)
            words.append(z)
        self._s = words

    def next_u64(self) -> np.ndarray:
        s0, s1, s2, s3 = self._s
        result = ((s1 * _U(5)) << _U(7) | (s1 * _U(5)) >> _U(57)) * _U(9)
        t = s1 << _U(17)
        s2 = s2 ^ s0
        s3 = s3 ^ s1
        s1 = s1 ^ s2
        s0 = s0 ^ s3
        s2 = s2 ^ t
        s3 = (s3 << _U(45)) | (s3 >> _U(19))
        self._s = [s0, s1, s2, s3]
        return result


def sign_matrix(seed: int, trials: int, n: int) -> np.ndarray:
    """(trials, n) matrix of Rademacher signs with per-trial streams.

    Trial ``t`` draws from its own generator seeded at ``(seed + t) mod 2**64``,
    so the matrix is independent of evaluation order and identical to taking
    ``Xoshiro256StarStar(seed + t).sign()`` n times for row t.
    """
    if trials < 1 or n < 1:
        raise ValueError("sign_matrix needs trials >= 1 and n >= 1")
    seeds = (np.uint64(seed & MASK64) + np.arange(trials, dtype=np.uint64))
    gen = _XoshiroVec(seeds)
    out = np.empty((trials, n), dtype=np.float64)
    for i in range(n):
        bits = gen.next_u64() >> _U(63)
        out[:, i] = np.where(bits.astype(bool), 1.0, -1.0)
    return out
