"""Exact Young-diagram combinatorics.

Boxes are 1-based ``(i, j)`` with ``i`` the row and ``j`` the column.

.. note:: **Content sign convention.** The content of box ``(i, j)`` is
   ``c = i - j`` (row minus column), the transpose of the convention most
   combinatorics texts use (``j - i``). Every Y-observable and character
   in this package is written with ``c = i - j``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterator, NamedTuple, Sequence

from .errors import DomainError, UnsupportedError

__all__ = [
    "Box",
    "Partition",
    "Profile",
    "hook_length",
    "dimension",
    "boundary_boxes",
    "profile",
    "moment_pk",
    "enumerate_partitions",
    "partitions_of",
    "ZETA_NEGATIVE",
]


class Box(NamedTuple):
    i: int
    j: int

    @property
    def content(self) -> int:
        return self.i - self.j


@dataclass(frozen=True)
class Partition:
    """Weakly decreasing tuple of positive row lengths; ``Partition(())`` is the empty diagram."""

    rows: tuple[int, ...] = ()
    size: int = field(init=False, repr=False, compare=False, default=0)

    def __post_init__(self):
        rows = tuple(int(r) for r in self.rows)
        if any(r <= 0 for r in rows):
            raise DomainError(f"rows must be positive: {rows}")
        if any(a < b for a, b in zip(rows, rows[1:])):
            raise DomainError(f"rows must be weakly decreasing: {rows}")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "size", sum(rows))

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)

    def __repr__(self) -> str:
        return f"Partition({list(self.rows)})"

    def row(self, i: int) -> int:
        """Length of row ``i`` (1-based); zero past the last row."""
        return self.rows[i - 1] if 1 <= i <= len(self.rows) else 0

    def col(self, j: int) -> int:
        """Length of column ``j`` (1-based)."""
        t = self.transpose().rows
        return t[j - 1] if 1 <= j <= len(t) else 0

    @cached_property
    def _transpose(self) -> "Partition":
        if not self.rows:
            return self
        return Partition(tuple(sum(1 for r in self.rows if r > j) for j in range(self.rows[0])))

    def transpose(self) -> "Partition":
        return self._transpose

    def boxes(self) -> Iterator[Box]:
        for i, r in enumerate(self.rows, start=1):
            for j in range(1, r + 1):
                yield Box(i, j)

    def __contains__(self, b) -> bool:
        i, j = b
        return i >= 1 and j >= 1 and j <= self.row(i)

    def arm(self, b: Box) -> int:
        return self.row(b[0]) - b[1]

    def leg(self, b: Box) -> int:
        return self.col(b[1]) - b[0]

    @cached_property
    def hooks(self) -> tuple[int, ...]:
        """Hook lengths in row-major box order."""
        t = self.transpose().rows
        return tuple(r - j + t[j - 1] - i + 1 for i, r in enumerate(self.rows, start=1) for j in range(1, r + 1))

    def add_box(self, i: int) -> "Partition":
        rows = list(self.rows) + [0]
        rows[i - 1] += 1
        return Partition(tuple(r for r in rows if r > 0))

    def remove_box(self, i: int) -> "Partition":
        rows = list(self.rows)
        rows[i - 1] -= 1
        return Partition(tuple(r for r in rows if r > 0))

    def to_json(self) -> str:
        return json.dumps(list(self.rows))

    @classmethod
    def from_json(cls, text: str) -> "Partition":
        data = json.loads(text)
        if not isinstance(data, list) or not all(isinstance(v, int) for v in data):
            raise DomainError(f"expected a JSON array of integers, got {text!r}")
        return cls(tuple(data))


EMPTY = Partition(())


def hook_length(lam: Partition, b: Box) -> int:
    if b not in lam:
        raise DomainError(f"box {tuple(b)} is not in {lam}")
    i, j = b
    return lam.row(i) - j + lam.col(j) - i + 1


def dimension(lam: Partition) -> int:
    """Number of standard Young tableaux, ``N! / prod(hooks)`` in exact integers."""
    return math.factorial(lam.size) // math.prod(lam.hooks)


def boundary_boxes(lam: Partition) -> tuple[list[Box], list[Box]]:
    """Return ``(addable, removable)`` boxes, ordered by row."""
    rows = list(lam.rows) + [0]
    addable, removable = [], []
    for i, r in enumerate(rows, start=1):
        if i == 1 or rows[i - 2] > r:
            addable.append(Box(i, r + 1))
        if r > 0 and r > rows[i]:
            removable.append(Box(i, r))
    return addable, removable


@dataclass(frozen=True)
class Profile:
    """Piecewise-linear profile f(x); breakpoints are exact, stored in units of ``hbar``.

    Outside ``[breakpoints[0].x, breakpoints[-1].x]`` the profile is ``|x|``.
    """

    breakpoints: tuple[tuple[Fraction, Fraction], ...]
    hbar: float = 1.0

    def __call__(self, x):
        import numpy as np

        xs = np.asarray(x, dtype=float) / self.hbar
        bx = np.array([float(p[0]) for p in self.breakpoints])
        bf = np.array([float(p[1]) for p in self.breakpoints])
        inside = np.interp(xs, bx, bf)
        out = np.where((xs < bx[0]) | (xs > bx[-1]), np.abs(xs), inside)
        return out * self.hbar

    def excess_area(self) -> Fraction:
        """Exact ``∫ (f - |x|) dx`` in units of ``hbar**2``."""
        pts = list(self.breakpoints)
        xs = sorted({p[0] for p in pts} | {Fraction(0)})
        xs = [x for x in xs if pts[0][0] <= x <= pts[-1][0]]
        vals = [self.at_unit(x) - abs(x) for x in xs]
        return sum(((b - a) * (va + vb) / 2 for a, b, va, vb in zip(xs, xs[1:], vals, vals[1:])), Fraction(0))

    def at_unit(self, u: Fraction) -> Fraction:
        """Exact value at ``x = u * hbar`` divided by ``hbar``."""
        pts = self.breakpoints
        if u <= pts[0][0] or u >= pts[-1][0]:
            return abs(Fraction(u))
        for (x0, f0), (x1, f1) in zip(pts, pts[1:]):
            if x0 <= u <= x1:
                return f0 + (f1 - f0) * (u - x0) / (x1 - x0)
        raise AssertionError("unreachable")


def _profile_unit(rows: Sequence[int], u: int) -> int:
    val = abs(u)
    for i, r in enumerate(rows, start=1):
        val += abs(u - (r - i + 1)) - abs(u - (r - i)) + abs(u + i) - abs(u + i - 1)
    return val


def profile(lam: Partition, hbar: float = 1.0) -> Profile:
    """Rotated boundary of ``lam`` as a Profile, evaluated exactly on the integer lattice."""
    if not hbar > 0:
        raise DomainError("hbar must be positive")
    lo, hi = -len(lam.rows), lam.row(1)
    pts = [(u, _profile_unit(lam.rows, u)) for u in range(lo, hi + 1)]
    # keep the slope-change points only
    keep = [pts[0]]
    for a, b, c in zip(pts, pts[1:], pts[2:]):
        if (b[1] - a[1]) != (c[1] - b[1]):
            keep.append(b)
    if len(pts) > 1:
        keep.append(pts[-1])
    return Profile(tuple((Fraction(u), Fraction(f)) for u, f in keep), float(hbar))


# zeta(-k) for k = 1..12
ZETA_NEGATIVE: dict[int, Fraction] = {
    1: Fraction(-1, 12),
    2: Fraction(0),
    3: Fraction(1, 120),
    4: Fraction(0),
    5: Fraction(-1, 252),
    6: Fraction(0),
    7: Fraction(1, 240),
    8: Fraction(0),
    9: Fraction(-1, 132),
    10: Fraction(0),
    11: Fraction(691, 32760),
    12: Fraction(0),
}


def moment_pk(lam: Partition, k: int) -> Fraction:
    """Shifted power sum ``(1-2^-k) zeta(-k) + sum_i (lam_i - i + 1/2)^k - (-i + 1/2)^k``."""
    if k < 1:
        raise DomainError("k must be >= 1")
    if k not in ZETA_NEGATIVE:
        raise UnsupportedError(f"zeta(-{k}) is not tabulated (k <= 12)")
    half = Fraction(1, 2)
    total = (1 - Fraction(1, 2**k)) * ZETA_NEGATIVE[k]
    for i, r in enumerate(lam.rows, start=1):
        total += (r - i + half) ** k - (-i + half) ** k
    return total


def partitions_of(n: int, largest: int | None = None) -> Iterator[Partition]:
    """Partitions of ``n`` in reverse lexicographic order."""

    def rec(n, cap):
        if n == 0:
            yield ()
            return
        for k in range(min(n, cap), 0, -1):
            for rest in rec(n - k, k):
                yield (k,) + rest

    for rows in rec(n, n if largest is None else largest):
        yield Partition(rows)


def enumerate_partitions(max_size: int) -> Iterator[Partition]:
    """Every partition with at most ``max_size`` boxes, grouped by size."""
    if max_size < 0:
        raise DomainError("max_size must be >= 0")
    for n in range(max_size + 1):
        yield from partitions_of(n)
