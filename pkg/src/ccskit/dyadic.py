"""Exact dyadic rational arithmetic.

All survival probabilities in the tree-code analysis are products and
sums of terms of the form k / 2**e, so they are representable exactly as
dyadic rationals.  Keeping them exact until the API boundary makes
normalisation checks (coefficients summing to one) exact instead of
approximate.
"""

from __future__ import annotations

from fractions import Fraction


class Dyadic:
    """A rational number num / 2**exp with big-integer numerator.

    Instances are normalised (num odd or zero, exp >= 0) and immutable.
    Mixed arithmetic with ints is supported; float conversion is done
    through Fraction so huge exponents round correctly.
    """

    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int = 0):
        if exp < 0:
            num <<= -exp
            exp = 0
        while num and exp and (num & 1) == 0:
            num >>= 1
            exp -= 1
        if num == 0:
            exp = 0
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "exp", exp)

    def __setattr__(self, *a):  # pragma: no cover
        raise AttributeError("Dyadic is immutable")

    @classmethod
    def zero(cls) -> "Dyadic":
        return cls(0)

    @classmethod
    def one(cls) -> "Dyadic":
        return cls(1)

    @classmethod
    def pow2(cls, k: int) -> "Dyadic":
        """2**k for any integer k (negative k gives 1 / 2**|k|)."""
        if k >= 0:
            return cls(1 << k)
        return cls(1, -k)

    @staticmethod
    def _coerce(x) -> "Dyadic":
        if isinstance(x, Dyadic):
            return x
        if isinstance(x, int):
            return Dyadic(x)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        e = max(self.exp, other.exp)
        return Dyadic((self.num << (e - self.exp)) + (other.num << (e - other.exp)), e)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        e = max(self.exp, other.exp)
        return Dyadic((self.num << (e - self.exp)) - (other.num << (e - other.exp)), e)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other - self

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Dyadic(self.num * other.num, self.exp + other.exp)

    __rmul__ = __mul__

    def __neg__(self):
        return Dyadic(-self.num, self.exp)

    def __eq__(self, other):
        if isinstance(other, Dyadic):
            return self.num == other.num and self.exp == other.exp
        if isinstance(other, int):
            return self.exp == 0 and self.num == other
        if isinstance(other, Fraction):
            return self.as_fraction() == other
        return NotImplemented

    def __hash__(self):
        return hash(self.as_fraction())

    def _cmp_key(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return None
        e = max(self.exp, other.exp)
        return self.num << (e - self.exp), other.num << (e - other.exp)

    def __lt__(self, other):
        k = self._cmp_key(other)
        return NotImplemented if k is None else k[0] < k[1]

    def __le__(self, other):
        k = self._cmp_key(other)
        return NotImplemented if k is None else k[0] <= k[1]

    def __gt__(self, other):
        k = self._cmp_key(other)
        return NotImplemented if k is None else k[0] > k[1]

    def __ge__(self, other):
        k = self._cmp_key(other)
        return NotImplemented if k is None else k[0] >= k[1]

    def __bool__(self):
        return self.num != 0

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.exp)

    def __float__(self) -> float:
        return float(self.as_fraction())

    def __repr__(self):
        if self.exp == 0:
            return f"Dyadic({self.num})"
        return f"Dyadic({self.num}, {self.exp})"


ZERO = Dyadic(0)
ONE = Dyadic(1)


def one_minus(x: Dyadic) -> Dyadic:
    """1 - x, exact."""
    return ONE - x
