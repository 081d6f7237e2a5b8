"""Truncated power series in a formal variable (``q`` or ``Lambda**2``)."""

from __future__ import annotations

from numbers import Number

import numpy as np

from .errors import DomainError

__all__ = ["QSeries"]


class QSeries:
    """Complex coefficients ``c_0 .. c_D``; every product is cut at order ``D``."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs, order: int | None = None):
        c = np.asarray(coeffs, dtype=complex).ravel()
        if order is not None:
            if len(c) < order + 1:
                c = np.concatenate([c, np.zeros(order + 1 - len(c), dtype=complex)])
            c = c[: order + 1]
        if len(c) == 0:
            raise DomainError("a series needs at least the constant term")
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def zeros(cls, order: int) -> "QSeries":
        return cls(np.zeros(order + 1), order)

    @classmethod
    def constant(cls, value, order: int) -> "QSeries":
        return cls([value], order)

    @classmethod
    def monomial(cls, value, power: int, order: int) -> "QSeries":
        c = np.zeros(order + 1, dtype=complex)
        if power <= order:
            c[power] = value
        return cls(c, order)

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    def __len__(self):
        return len(self.coeffs)

    def __getitem__(self, k):
        return self.coeffs[k]

    def __repr__(self):
        return f"QSeries({np.array2string(self.coeffs, precision=6)})"

    def _coerce(self, other) -> "QSeries":
        if isinstance(other, QSeries):
            if other.order != self.order:
                raise DomainError(f"order mismatch {self.order} != {other.order}")
            return other
        if isinstance(other, Number):
            return QSeries.constant(other, self.order)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QSeries(self.coeffs + o.coeffs)

    __radd__ = __add__

    def __neg__(self):
        return QSeries(-self.coeffs)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QSeries(self.coeffs - o.coeffs)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            return QSeries(self.coeffs * other)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return QSeries(np.convolve(self.coeffs, o.coeffs)[: self.order + 1])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Number):
            return QSeries(self.coeffs / other)
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def inverse(self) -> "QSeries":
        """Reciprocal of a unit series (nonzero constant term)."""
        c = self.coeffs
        if c[0] == 0:
            raise DomainError("series is not a unit (zero constant term)")
        out = np.zeros_like(c)
        out[0] = 1.0 / c[0]
        for k in range(1, len(c)):
            out[k] = -np.dot(c[1 : k + 1], out[k - 1 :: -1][:k]) / c[0]
        return QSeries(out)

    def shift(self, power: int) -> "QSeries":
        """Multiply by ``q**power`` (power >= 0)."""
        c = np.zeros_like(self.coeffs)
        if power <= self.order:
            c[power:] = self.coeffs[: self.order + 1 - power]
        return QSeries(c)

    def __call__(self, q):
        """Evaluate the truncated polynomial at a numeric ``q``."""
        return np.polynomial.polynomial.polyval(q, self.coeffs)

    def allclose(self, other, rtol=1e-9, atol=0.0) -> bool:
        o = self._coerce(other)
        return bool(np.allclose(self.coeffs, o.coeffs, rtol=rtol, atol=atol))
