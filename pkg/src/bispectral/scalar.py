"""Scalars for the two arithmetic backends.

The float backend uses Python/numpy ``complex``.  The exact backend uses
:class:`GaussianRational`, a complex number whose real and imaginary parts
are :class:`fractions.Fraction`.  Integers are accepted by both backends;
floats never enter an exact computation.
"""
from __future__ import annotations

import enum
import numbers
from fractions import Fraction

from .errors import MixedBackendError


class Backend(str, enum.Enum):
    FLOAT = "float"
    EXACT = "exact"


def _as_fraction(value) -> Fraction:
    if isinstance(value, bool):
        return Fraction(int(value))
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, numbers.Rational):
        return Fraction(int(value.numerator), int(value.denominator))
    if isinstance(value, str):
        return Fraction(value.strip())
    raise MixedBackendError(
        f"cannot use {type(value).__name__} {value!r} as an exact rational"
    )


class GaussianRational:
    """Complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        if isinstance(re, GaussianRational):
            if im != 0:
                raise TypeError("imaginary part given twice")
            re, im = re.re, re.im
        object.__setattr__(self, "re", _as_fraction(re))
        object.__setattr__(self, "im", _as_fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("GaussianRational is immutable")

    @classmethod
    def _coerce(cls, other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Fraction)) or (
            isinstance(other, numbers.Rational) and not isinstance(other, bool)
        ):
            return cls(other)
        if isinstance(other, (float, complex, numbers.Complex)) and not isinstance(
            other, numbers.Rational
        ):
            raise MixedBackendError(
                f"mixing exact and floating-point scalars ({other!r})"
            )
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return GaussianRational(
            self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        d = o.norm2()
        if d == 0:
            raise ZeroDivisionError("exact division by zero")
        return GaussianRational(
            (self.re * o.re + self.im * o.im) / d, (self.im * o.re - self.re * o.im) / d
        )

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, k):
        if not isinstance(k, int):
            return NotImplemented
        if k < 0:
            return GaussianRational(1) / (self ** (-k))
        result, base = GaussianRational(1), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __pos__(self):
        return self

    def __abs__(self):
        return abs(complex(self))

    def norm2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    @property
    def real(self):
        return self.re

    @property
    def imag(self):
        return self.im

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        if isinstance(other, GaussianRational):
            return self.re == other.re and self.im == other.im
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        return NotImplemented

    def __hash__(self):
        return hash(self.re) if self.im == 0 else hash((self.re, self.im))

    def __repr__(self):
        return f"GaussianRational({str(self.re)!r}, {str(self.im)!r})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        sign = "+" if self.im >= 0 else "-"
        return f"{self.re}{sign}{abs(self.im)}i"


def is_exact(value) -> bool:
    return isinstance(value, (GaussianRational, Fraction)) or (
        isinstance(value, numbers.Rational) and not isinstance(value, bool)
    )


def to_exact(value) -> GaussianRational:
    """Convert ``value`` to a GaussianRational.

    Accepts ints, Fractions, GaussianRationals, a ``(re, im)`` pair or a
    rational string such as ``"3/4"``.  Floats are rejected.
    """
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, (tuple, list)) and len(value) == 2:
        return GaussianRational(value[0], value[1])
    return GaussianRational(value)


def to_float(value) -> complex:
    return complex(value)


def coerce(value, backend):
    if Backend(backend) is Backend.EXACT:
        return to_exact(value)
    return complex(value)


def exact_random(rng, bound=5, denominator=4) -> GaussianRational:
    """Gaussian rational with parts ``k/denominator`` and ``|part| <= bound``."""
    lim = bound * denominator
    return GaussianRational(
        Fraction(int(rng.integers(-lim, lim + 1)), denominator),
        Fraction(int(rng.integers(-lim, lim + 1)), denominator),
    )
