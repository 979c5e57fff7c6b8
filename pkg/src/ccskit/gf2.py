"""Bit-packed linear algebra over GF(2).

Bit vectors and matrices are stored as Python integers (one word per
matrix row), so XOR-heavy inner loops in the Monte Carlo code run on
machine-word operations instead of per-bit Python objects.  Bit ``i`` of
a block is the coefficient at position ``i``; position 0 is stored in
the least significant bit.

Conventions: messages are row vectors, parity is ``p = w G`` with ``G``
of shape m x l, so ``nullity(G) = m - rank(G)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .dyadic import Dyadic
from .seeds import random_bits


@dataclass(frozen=True)
class BitBlock:
    """A fixed-width bit string: ``value`` packs bits LSB-first, ``width`` is the bit count."""

    value: int
    width: int

    def __post_init__(self):
        if self.width < 0:
            raise ValueError("negative width")
        if not 0 <= self.value < (1 << self.width):
            raise ValueError(f"value {self.value} does not fit in {self.width} bits")

    @classmethod
    def zeros(cls, width: int) -> "BitBlock":
        return cls(0, width)

    @classmethod
    def from_bits(cls, bits: Iterable[int]) -> "BitBlock":
        value = 0
        width = 0
        for b in bits:
            if b not in (0, 1):
                raise ValueError("bits must be 0 or 1")
            value |= b << width
            width += 1
        return cls(value, width)

    @classmethod
    def from_string(cls, s: str) -> "BitBlock":
        """Parse "1011" with the leftmost character as bit 0."""
        return cls.from_bits(int(c) for c in s)

    @classmethod
    def random(cls, rng: np.random.Generator, width: int) -> "BitBlock":
        return cls(random_bits(rng, width), width)

    def bit(self, i: int) -> int:
        if not 0 <= i < self.width:
            raise IndexError(i)
        return (self.value >> i) & 1

    def bits(self) -> tuple:
        return tuple((self.value >> i) & 1 for i in range(self.width))

    def __len__(self) -> int:
        return self.width

    def __xor__(self, other: "BitBlock") -> "BitBlock":
        if self.width != other.width:
            raise ValueError(f"width mismatch: {self.width} vs {other.width}")
        return BitBlock(self.value ^ other.value, self.width)

    # GF(2) addition is XOR.
    __add__ = __xor__

    def concat(self, other: "BitBlock") -> "BitBlock":
        """This block followed by ``other`` (other occupies the higher positions)."""
        return BitBlock(self.value | (other.value << self.width), self.width + other.width)

    def split(self, widths: Sequence[int]) -> tuple:
        """Split into consecutive blocks of the given widths."""
        if sum(widths) != self.width:
            raise ValueError(f"widths sum to {sum(widths)}, block has {self.width}")
        out = []
        v = self.value
        for w in widths:
            out.append(BitBlock(v & ((1 << w) - 1), w))
            v >>= w
        return tuple(out)

    def is_zero(self) -> bool:
        return self.value == 0

    def __repr__(self):
        return f"BitBlock('{''.join(str(b) for b in self.bits())}')"


def concat_blocks(blocks: Iterable[BitBlock]) -> BitBlock:
    value = 0
    width = 0
    for b in blocks:
        value |= b.value << width
        width += b.width
    return BitBlock(value, width)


@dataclass(frozen=True)
class BinaryMatrix:
    """A rows x cols matrix over GF(2), one packed integer per row."""

    rows: int
    cols: int
    row_words: tuple

    def __post_init__(self):
        if len(self.row_words) != self.rows:
            raise ValueError("row count mismatch")
        limit = 1 << self.cols
        if any(not 0 <= r < limit for r in self.row_words):
            raise ValueError("row word exceeds column width")

    @classmethod
    def from_rows(cls, rows: Iterable[int], cols: int) -> "BinaryMatrix":
        words = tuple(int(r) for r in rows)
        return cls(len(words), cols, words)

    @classmethod
    def from_array(cls, a) -> "BinaryMatrix":
        a = np.asarray(a, dtype=np.uint8) & 1
        words = tuple(int(sum(int(v) << j for j, v in enumerate(row))) for row in a)
        return cls(a.shape[0], a.shape[1], words)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "BinaryMatrix":
        return cls(rows, cols, (0,) * rows)

    @classmethod
    def identity(cls, n: int) -> "BinaryMatrix":
        return cls(n, n, tuple(1 << i for i in range(n)))

    def entry(self, i: int, j: int) -> int:
        return (self.row_words[i] >> j) & 1

    def row(self, i: int) -> BitBlock:
        return BitBlock(self.row_words[i], self.cols)

    def to_array(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for i, w in enumerate(self.row_words):
            for j in range(self.cols):
                out[i, j] = (w >> j) & 1
        return out

    def __repr__(self):
        return f"BinaryMatrix({self.rows}x{self.cols})"


def random_matrix(rows: int, cols: int, rng: np.random.Generator) -> BinaryMatrix:
    """A Rademacher matrix: i.i.d. uniform Bernoulli entries from ``rng``."""
    if rows < 0 or cols < 0:
        raise ValueError("negative dimension")
    return BinaryMatrix(rows, cols, tuple(random_bits(rng, cols) for _ in range(rows)))


def mul_vec_mat(w: BitBlock, G: BinaryMatrix) -> BitBlock:
    """Row-vector times matrix over GF(2): XOR of the rows of G selected by w."""
    if w.width != G.rows:
        raise ValueError(f"vector width {w.width} != matrix rows {G.rows}")
    acc = 0
    v = w.value
    words = G.row_words
    i = 0
    while v:
        if v & 1:
            acc ^= words[i]
        v >>= 1
        i += 1
    return BitBlock(acc, G.cols)


def rank(G: BinaryMatrix) -> int:
    """GF(2) row rank by Gaussian elimination on packed rows."""
    rows = [w for w in G.row_words if w]
    r = 0
    for col in range(G.cols):
        mask = 1 << col
        pivot = None
        for i in range(r, len(rows)):
            if rows[i] & mask:
                pivot = i
                break
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        for i in range(len(rows)):
            if i != r and rows[i] & mask:
                rows[i] ^= rows[r]
        r += 1
        if r == len(rows):
            break
    return r


def nullity(G: BinaryMatrix) -> int:
    """Dimension of {w : w G = 0} for row vectors of length G.rows."""
    return G.rows - rank(G)


def collision_prob_fixed_G(G: BinaryMatrix) -> Dyadic:
    """Probability that a uniform random input collides with a fixed one
    in parity space: exactly 2**(-rank(G))."""
    return Dyadic.pow2(-rank(G))
