"""Seeded bit streams.

Every random quantity in the package is derived from a :class:`SeedSpec`.
The splitting function is fixed: the substream for ``(master, index)`` is
Philox4x64-10 (as shipped by numpy, whose bit generators are stream-stable
across releases) with the 128-bit key ``master | index << 64`` and the
counter starting at zero.  Raw 64-bit outputs are consumed in order; when a
bit stream is needed, each word is read most-significant bit first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GENERATOR = "philox4x64-10/key=master|index<<64/msb-first"

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class SeedSpec:
    master: int
    index: int = 0

    def __post_init__(self):
        if not 0 <= self.master <= _U64:
            raise ValueError(f"master seed must be an unsigned 64-bit integer, got {self.master}")
        if self.index < 0:
            raise ValueError(f"stream index must be non-negative, got {self.index}")

    def substream(self, index: int) -> "SeedSpec":
        return SeedSpec(self.master, index)

    def bit_generator(self) -> np.random.Philox:
        return np.random.Philox(key=self.master | (self.index << 64))


def raw_words(seed: SeedSpec, count: int) -> np.ndarray:
    """First ``count`` 64-bit outputs of the substream."""
    return seed.bit_generator().random_raw(count).astype(np.uint64)


def words_to_bits(words: np.ndarray) -> np.ndarray:
    return np.unpackbits(np.asarray(words, dtype=">u8").view(np.uint8))


class BitStream:
    """Lazily generated bits ``b1 b2 b3 ...`` of a substream.

    Bits are produced in 64-bit blocks and cached, so ``take(n)`` is
    amortized O(1) per bit and always returns the same prefix regardless of
    how the requests were chunked.
    """

    def __init__(self, seed: SeedSpec):
        self.seed = seed
        self._gen = seed.bit_generator()
        self._buf = np.empty(0, dtype=np.uint8)

    def take(self, n: int) -> np.ndarray:
        if n > self._buf.size:
            have = self._buf.size
            want = max(n, 2 * have)
            nwords = -(-(want - have) // 64)
            fresh = words_to_bits(self._gen.random_raw(nwords))
            self._buf = np.concatenate([self._buf, fresh])
        return self._buf[:n]

    def integer(self, n: int) -> int:
        """The first ``n`` bits read as a big-endian integer."""
        if n == 0:
            return 0
        bits = self.take(n)
        return int.from_bytes(np.packbits(bits).tobytes(), "big") >> ((-n) % 8)


