"""Sample points as packed streams of i.i.d. fair bits.

A uniform point alpha in [0,1) is represented by its binary digits
e_1, e_2, ... (e_1 is the most significant digit).  The angle-doubling
map 2*alpha mod 1 then acts as an exact index shift on the digits, so
orbits never touch binary64 arithmetic and cannot collapse onto the
dyadic rationals the way iterated floating-point doubling does.

Bit i is a pure function of (seed, i): word w of the stream is
mix64(mix64(seed) + (w+1)*GOLDEN) with all arithmetic mod 2**64, i.e. a
splitmix64 sequence whose start is the avalanched seed.  Generation is
therefore independent of chunking and thread count by construction, and
the avalanche step keeps streams with related seeds (the replicate rule
XORs multiples of GOLDEN into one master seed) from landing on a common
arithmetic lattice of mixer inputs, which would correlate them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15  # 2**64 / golden ratio, odd

_GOLDEN_U64 = np.uint64(GOLDEN)
_MIX_MUL1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_MUL2 = np.uint64(0x94D049BB133111EB)

# window values are exact binary64 only up to the full mantissa
MAX_WINDOW_WIDTH = 53


def split_seed(master_seed: int, index: int) -> int:
    """Seed for replicate `index`: master_seed XOR (index * GOLDEN) mod 2**64."""
    return (master_seed ^ ((index * GOLDEN) & MASK64)) & MASK64


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, elementwise on uint64 arrays (wrapping)."""
    x = (x ^ (x >> np.uint64(30))) * _MIX_MUL1
    x = (x ^ (x >> np.uint64(27))) * _MIX_MUL2
    return x ^ (x >> np.uint64(31))


def words_for_seeds(seeds: np.ndarray, nwords: int) -> np.ndarray:
    """Packed bit words for many streams at once.

    Returns an array of shape (len(seeds), nwords), word w of stream j
    being mix64(mix64(seeds[j]) + (w+1)*GOLDEN).  Bit 1 of a stream is
    the MSB of its word 0.
    """
    seeds = np.ascontiguousarray(seeds, dtype=np.uint64)
    ctr = np.arange(1, nwords + 1, dtype=np.uint64) * _GOLDEN_U64
    return _mix64(_mix64(seeds)[:, None] + ctr[None, :])


@dataclass(frozen=True)
class DyadicWindow:
    """Value of bits offset+1 .. offset+width read as a binary fraction.

    value = sum_{i=1..width} e_{offset+i} * 2**-i, so
    |value - frac(2**offset * alpha)| <= 2**-width.
    """

    offset: int
    width: int
    value: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.value < 1.0:
            raise ValueError(f"window value {self.value} outside [0, 1)")


class DigitStream:
    """Immutable, seed-reproducible stream of fair bits.

    Bits are stored packed 64 per uint64 word, MSB first, and indexed
    from 1 to match the digit numbering of the represented point.
    Streams built from the same seed agree on their common prefix
    regardless of the requested length.
    """

    __slots__ = ("seed", "nbits", "_words")

    def __init__(self, seed: Optional[int], nbits: int, words: np.ndarray):
        self.seed = seed
        self.nbits = nbits
        self._words = words

    @classmethod
    def generate(cls, seed: int, count: int) -> "DigitStream":
        if count < 1:
            raise ValueError("count must be >= 1")
        if not 0 <= seed <= MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        nwords = (count + 63) // 64
        words = words_for_seeds(np.array([seed], dtype=np.uint64), nwords)[0]
        words.setflags(write=False)
        return cls(seed, count, words)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "DigitStream":
        """Stream with explicitly given bits (diagnostics and tests)."""
        arr = np.asarray(bits, dtype=np.uint8)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("bits must be a nonempty 1-d sequence")
        if np.any(arr > 1):
            raise ValueError("bits must be 0 or 1")
        padded = np.zeros(((arr.size + 63) // 64) * 64, dtype=np.uint8)
        padded[: arr.size] = arr
        words = np.packbits(padded).view(">u8").astype(np.uint64)
        words.setflags(write=False)
        return cls(None, arr.size, words)

    def __len__(self) -> int:
        return self.nbits

    def bit(self, i: int) -> int:
        """Digit e_i, 1-indexed."""
        if not 1 <= i <= self.nbits:
            raise IndexError(f"bit index {i} outside 1..{self.nbits}")
        word = int(self._words[(i - 1) >> 6])
        return (word >> (63 - ((i - 1) & 63))) & 1

    def bits(self) -> np.ndarray:
        """All digits as a 0/1 uint8 array of length nbits."""
        raw = np.unpackbits(self._words.astype(">u8").view(np.uint8))
        return raw[: self.nbits]

    def window(self, offset: int, width: int) -> DyadicWindow:
        """Bits offset+1 .. offset+width as a dyadic fraction in [0, 1)."""
        if width < 1 or width > MAX_WINDOW_WIDTH:
            raise ValueError(f"width must be in 1..{MAX_WINDOW_WIDTH}")
        if offset < 0:
            raise ValueError("offset must be >= 0")
        if offset + width > self.nbits:
            raise ValueError(
                f"insufficient bits: window needs {offset + width}, stream has {self.nbits}"
            )
        q, rsh = offset >> 6, offset & 63
        chunk = (int(self._words[q]) << rsh) & MASK64
        if rsh + width > 64:
            chunk |= int(self._words[q + 1]) >> (64 - rsh)
        u = chunk >> (64 - width)
        return DyadicWindow(offset, width, u * 2.0**-width)


def generate(seed: int, count: int) -> DigitStream:
    """Deterministic stream of `count` fair bits for the given 64-bit seed."""
    return DigitStream.generate(seed, count)


def window(stream: DigitStream, offset: int, width: int) -> DyadicWindow:
    """Dyadic window of `stream`; see DigitStream.window."""
    return stream.window(offset, width)
