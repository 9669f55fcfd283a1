"""Platform-stable pseudo random numbers.

xoshiro256++ seeded through splitmix64.  Everything here is plain integer
arithmetic so a given seed yields the same stream on every machine, which
the CSV golden files and Monte-Carlo determinism tests rely on.
"""

import math

import numpy as np

MASK64 = (1 << 64) - 1


def splitmix64(state):
    """Advance a splitmix64 state; return ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


def _rotl(x, k):
    return ((x << k) | (x >> (64 - k))) & MASK64


class Xoshiro256pp:
    """xoshiro256++ generator with a splitmix64-expanded 64-bit seed."""

    def __init__(self, seed=0):
        sm = int(seed) & MASK64
        s = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            s.append(out)
        self._s = s
        self.seed = int(seed) & MASK64

    @classmethod
    def from_state(cls, state):
        """Generator starting from an explicit four-word state (not all zero)."""
        words = [int(w) & MASK64 for w in state]
        if len(words) != 4 or not any(words):
            raise ValueError("state must be four words, not all zero")
        gen = cls.__new__(cls)
        gen._s = words
        gen.seed = None
        return gen

    def next_u64(self):
        s0, s1, s2, s3 = self._s
        result = (_rotl((s0 + s3) & MASK64, 23) + s0) & MASK64
        t = (s1 << 17) & MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def u64_array(self, count):
        return np.array([self.next_u64() for _ in range(count)], dtype=np.uint64)

    def random(self):
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def randbelow(self, k):
        """Uniform integer in [0, k) by rejection (no modulo bias)."""
        if k <= 0:
            raise ValueError("k must be positive")
        limit = (1 << 64) - ((1 << 64) % k)
        while True:
            x = self.next_u64()
            if x < limit:
                return x % k

    def normals(self, count):
        """``count`` standard normals via Box-Muller (odd spare is dropped)."""
        out = np.empty(count)
        i = 0
        while i < count:
            u1 = 1.0 - self.random()  # (0, 1], keeps log finite
            u2 = self.random()
            radius = math.sqrt(-2.0 * math.log(u1))
            angle = 2.0 * math.pi * u2
            out[i] = radius * math.cos(angle)
            if i + 1 < count:
                out[i + 1] = radius * math.sin(angle)
            i += 2
        return out

    def signs(self, samples, n):
        """``(samples, n)`` matrix of independent uniform +-1 entries.

        Each row consumes ``ceil(n / 64)`` words; bit ``j`` of the row's words
        decides entry ``j`` (set -> +1).
        """
        words = (n + 63) // 64
        raw = self.u64_array(samples * words).reshape(samples, words)
        as_bytes = raw.astype("<u8").view(np.uint8).reshape(samples, words * 8)
        bits = np.unpackbits(as_bytes, axis=1, bitorder="little")[:, :n]
        return np.where(bits == 1, 1.0, -1.0)


def substream_seed(seed, index):
    """Deterministic child seed for batch ``index`` of master ``seed``."""
    state = (int(seed) ^ ((index + 1) * 0xD1B54A32D192ED03)) & MASK64
    _, out = splitmix64(state)
    return out
