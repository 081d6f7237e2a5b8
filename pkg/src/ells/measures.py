"""Weights and truncated normalizations of the partition ensembles.

Conventions
-----------
* The elliptic mass is stored as a real number ``M`` with ``m = i*M``, so
  ``m**2 = -M**2`` and the elliptic box factor ``1 - (m/(hbar h))**2`` is
  ``1 + (M/(hbar h))**2 > 0``.
* The macrocanonical fugacity is ``Q = (Lambda/hbar)**2 > 0``: the weight
  of ``lam`` is ``Q**|lam| / prod(h**2)`` and the normalization is ``e**Q``.
  Hence ``<|lam|> = Q = Lambda**2 / hbar**2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple

from .errors import DegenerateMeasureError, DomainError, SingularParameterError
from .partitions import Partition, dimension, enumerate_partitions, partitions_of

__all__ = [
    "EnsembleParams",
    "MeasureKind",
    "TruncatedSum",
    "plancherel_prob",
    "macrocanonical_weight",
    "elliptic_weight",
    "beta_weight",
    "weight",
    "partition_function",
    "expectation",
]


class MeasureKind(enum.Enum):
    PLANCHEREL_FIXED_N = "plancherel"
    MACROCANONICAL = "macrocanonical"
    ELLIPTIC = "elliptic"
    BETA_DEFORMED = "beta"


@dataclass(frozen=True)
class EnsembleParams:
    """Parameter pack shared by all measures.

    ``q`` nome in [0, 1); ``M`` imaginary part of the mass (``m = i M``);
    ``hbar`` box size; ``Lambda`` scale; ``Q`` macrocanonical fugacity;
    ``eps1``, ``eps2`` deformation parameters of the beta-deformed weight.
    """

    q: float = 0.0
    M: float = 0.0
    hbar: float = 1.0
    Lambda: float = 1.0
    Q: float = 1.0
    eps1: float = 1.0
    eps2: float = -1.0

    def __post_init__(self):
        if not (0.0 <= self.q < 1.0):
            raise DomainError(f"nome q must lie in [0, 1), got {self.q}")
        if not self.hbar > 0:
            raise DomainError("hbar must be positive")
        if not self.Q > 0:
            raise DomainError("fugacity Q must be positive")
        if not self.Lambda > 0:
            raise DomainError("Lambda must be positive")

    @property
    def m(self) -> complex:
        return 1j * self.M

    @classmethod
    def macrocanonical(cls, Lambda: float, hbar: float, **kw) -> "EnsembleParams":
        return cls(Lambda=Lambda, hbar=hbar, Q=(Lambda / hbar) ** 2, **kw)

    @classmethod
    def inozemtsev(cls, q: float, Lambda: float = 1.0, hbar: float = 1.0, **kw) -> "EnsembleParams":
        """Elliptic parameters on the confluent line ``M = -Lambda q**-1/2``."""
        if not q > 0:
            raise DomainError("the Inozemtsev matching needs q > 0")
        return cls(q=q, M=-Lambda / math.sqrt(q), hbar=hbar, Lambda=Lambda, Q=(Lambda / hbar) ** 2, **kw)


class TruncatedSum(NamedTuple):
    """A sum truncated at ``|lam| <= D`` and its last (size-``D``) increment."""

    value: complex
    last_increment: complex


def plancherel_prob(lam: Partition) -> Fraction:
    return Fraction(dimension(lam) ** 2, math.factorial(lam.size))


def macrocanonical_weight(lam: Partition, Q: float) -> float:
    if not Q > 0:
        raise DomainError("fugacity Q must be positive")
    return Q**lam.size / math.prod(h * h for h in lam.hooks)


def elliptic_weight(lam: Partition, p: EnsembleParams) -> float:
    r = (p.M / p.hbar) ** 2
    w = p.q**lam.size
    for h in lam.hooks:
        w *= 1.0 + r / (h * h)
    return w


def beta_weight(lam: Partition, p: EnsembleParams) -> complex:
    """Arm/leg-resolved weight with ``m = i M``; complex in general."""
    m = p.m
    t = lam.transpose()
    w = complex(p.q**lam.size)
    for b in lam.boxes():
        a = lam.row(b.i) - b.j
        l = t.row(b.j) - b.i
        d1 = p.eps1 * (a + 1) - p.eps2 * l
        d2 = -p.eps1 * a + p.eps2 * (l + 1)
        if d1 == 0 or d2 == 0:
            raise SingularParameterError(f"vanishing denominator at box {tuple(b)} (arm {a}, leg {l})")
        w *= (1 + m / d1) * (1 + m / d2)
    return w


def weight(kind: MeasureKind, lam: Partition, p: EnsembleParams):
    if kind is MeasureKind.PLANCHEREL_FIXED_N:
        return float(plancherel_prob(lam))
    if kind is MeasureKind.MACROCANONICAL:
        return macrocanonical_weight(lam, p.Q)
    if kind is MeasureKind.ELLIPTIC:
        return elliptic_weight(lam, p)
    if kind is MeasureKind.BETA_DEFORMED:
        return beta_weight(lam, p)
    raise DomainError(f"unknown measure kind {kind!r}")


def _support(kind: MeasureKind, D: int):
    # fixed-N Plancherel lives on |lam| = D only
    if kind is MeasureKind.PLANCHEREL_FIXED_N:
        return partitions_of(D)
    return enumerate_partitions(D)


def _fsum(values) -> complex:
    values = list(values)
    re = math.fsum(complex(v).real for v in values)
    im = math.fsum(complex(v).imag for v in values)
    return complex(re, im)


def _collapse(z: complex, kind: MeasureKind):
    return z if kind is MeasureKind.BETA_DEFORMED else z.real


def partition_function(kind: MeasureKind, p: EnsembleParams, D: int) -> TruncatedSum:
    """Sum of weights over ``|lam| <= D`` (``|lam| = D`` for fixed-N Plancherel)."""
    if D < 0:
        raise DomainError("truncation order must be >= 0")
    by_size: dict[int, list] = {}
    for lam in _support(kind, D):
        by_size.setdefault(lam.size, []).append(weight(kind, lam, p))
    partials = [_fsum(by_size.get(n, [])) for n in range(D + 1)]
    total = _fsum(partials)
    return TruncatedSum(_collapse(total, kind), _collapse(partials[D], kind))


def expectation(
    kind: MeasureKind,
    p: EnsembleParams,
    D: int,
    observable: Callable[[Partition], complex],
) -> complex:
    """``sum w O / sum w`` over the truncated support; exact-rounded (fsum) reductions."""
    ws, wo = [], []
    for lam in _support(kind, D):
        w = weight(kind, lam, p)
        ws.append(w)
        wo.append(w * observable(lam))
    Z = _fsum(ws)
    if Z == 0:
        raise DegenerateMeasureError("truncated normalization vanished")
    return _fsum(wo) / Z
