"""Exact Gaussian-rational scalars used as expression coefficients."""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational


class GaussRat:
    """A complex number ``re + im*I`` with exact rational parts."""

    __slots__ = ("re", "im", "_hash")

    def __init__(self, re=0, im=0):
        self.re = re if isinstance(re, Fraction) else Fraction(re)
        self.im = im if isinstance(im, Fraction) else Fraction(im)
        self._hash = None

    @classmethod
    def coerce(cls, value) -> "GaussRat":
        if isinstance(value, GaussRat):
            return value
        if isinstance(value, (int, Rational)):
            return cls(Fraction(value))
        if isinstance(value, complex):
            return cls(Fraction(value.real), Fraction(value.imag))
        if isinstance(value, float):
            return cls(Fraction(value))
        raise TypeError(f"cannot use {value!r} as an exact coefficient")

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    def __add__(self, other):
        other = GaussRat.coerce(other)
        return GaussRat(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = GaussRat.coerce(other)
        return GaussRat(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return GaussRat.coerce(other) - self

    def __neg__(self):
        return GaussRat(-self.re, -self.im)

    def __mul__(self, other):
        other = GaussRat.coerce(other)
        if not self.im and not other.im:
            return GaussRat(self.re * other.re)
        return GaussRat(self.re * other.re - self.im * other.im,
                        self.re * other.im + self.im * other.re)

    __rmul__ = __mul__

    def inverse(self) -> "GaussRat":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero coefficient")
        if not self.im:
            return GaussRat(1 / self.re)
        d = self.re * self.re + self.im * self.im
        return GaussRat(self.re / d, -self.im / d)

    def __truediv__(self, other):
        return self * GaussRat.coerce(other).inverse()

    def __rtruediv__(self, other):
        return GaussRat.coerce(other) * self.inverse()

    def __pow__(self, n: int):
        if n < 0:
            return self.inverse() ** (-n)
        out = GaussRat(1)
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    def conjugate(self) -> "GaussRat":
        return GaussRat(self.re, -self.im)

    def __eq__(self, other):
        if isinstance(other, GaussRat):
            return self.re == other.re and self.im == other.im
        try:
            other = GaussRat.coerce(other)
        except TypeError:
            return NotImplemented
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.re, self.im))
        return self._hash

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def key(self):
        return (self.re, self.im)

    def to_json(self):
        """Canonical serialization: ``"num/den"`` for reals, ``[re, im]`` otherwise."""
        if not self.im:
            return _frac_str(self.re)
        return [_frac_str(self.re), _frac_str(self.im)]

    def __str__(self):
        if not self.im:
            return _frac_str(self.re)
        if not self.re:
            if abs(self.im) == 1:
                return "I" if self.im > 0 else "-I"
            return f"{_frac_str(self.im)}*I"
        return f"({_frac_str(self.re)} + {_frac_str(self.im)}*I)"

    def __repr__(self):
        return f"GaussRat({self})"


def _frac_str(f: Fraction) -> str:
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"


ZERO = GaussRat(0)
ONE = GaussRat(1)
I = GaussRat(0, 1)
