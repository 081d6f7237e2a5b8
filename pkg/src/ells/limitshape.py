"""Limit shape of the elliptic ensemble and its degenerations.

Coordinates: the mass is ``m = i M`` with ``M < 0``, so the cut of ``x(z)`` on
the bottom edge of the fundamental cylinder is ``x = |M| X(theta)``, real and
symmetric. Conversions between the parametrizations:

============  =====================  ==========================
quantity      elliptic               confluent (Plancherel)
============  =====================  ==========================
``m``         ``i M``                ``-i Lambda q**-1/2``
``M``         ``< 0``                ``-Lambda / sqrt(q)``
``Lambda``    ``|M| sqrt(q)``        ``Lambda``
============  =====================  ==========================

Integrals against ``f''`` are done in the angle: ``int f''(y) g(y) dy =
(1/pi) int_0^{2pi} g(|M| X(theta)) dtheta``, whose integrand is smooth and
periodic, so the trapezoid rule is spectrally accurate.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import brentq

from . import elliptic as ek
from .errors import DomainError, NoSolutionError

__all__ = [
    "Q_MAX",
    "inozemtsev_M",
    "solve_theta_star",
    "cut_endpoint",
    "invert_branches",
    "f_second",
    "f_first",
    "f_exact",
    "LimitShape",
    "solve_limit_shape",
    "VKShape",
    "vk_closed_form",
    "edge_coefficient",
    "edge_fit",
    "EdgeFit",
    "verify_integral_equation",
    "integral_of_f2",
    "SeriesFit",
    "series_coefficients",
    "fprime_correction",
    "lambert_solve",
    "normalized_family",
    "second_moment",
]

Q_MAX = 0.9
_BISECT_ITERS = 64


def inozemtsev_M(q: float, Lambda: float = 1.0) -> float:
    """Mass coordinate on the confluent line, ``M = -Lambda q**-1/2``."""
    if not q > 0:
        raise DomainError("the confluent matching needs q > 0")
    return -Lambda / math.sqrt(q)


def _check_M(M: float):
    if not M < 0:
        raise DomainError(f"the real-cut convention needs M < 0, got {M}")


def solve_theta_star(q: float) -> float:
    """Unique zero of ``X'`` in ``(0, pi)``."""
    if not 0.0 < q <= Q_MAX:
        raise DomainError(f"theta* is solved for q in (0, {Q_MAX}], got {q}")
    lo, hi = 0.0, math.pi
    a, b = ek.X_prime(lo, q), ek.X_prime(hi, q)
    if not (a > 0 > b):
        raise DomainError(f"X' has no sign change on (0, pi) at q={q}")
    return brentq(lambda t: ek.X_prime(t, q), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


def cut_endpoint(q: float, M: float, theta_star: float | None = None) -> float:
    _check_M(M)
    ts = solve_theta_star(q) if theta_star is None else theta_star
    return abs(M) * float(ek.X_theta(ts, q))


def _bisect(fun, lo, hi, target):
    """Vectorized bisection for ``fun(t) = target`` with ``fun(lo) - target`` and ``fun(hi) - target`` of opposite sign."""
    lo = np.array(lo, dtype=float) + np.zeros_like(target)
    hi = np.array(hi, dtype=float) + np.zeros_like(target)
    s_lo = np.sign(fun(lo) - target)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        s = np.sign(fun(mid) - target)
        left = s == s_lo
        lo = np.where(left, mid, lo)
        hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)


def invert_branches(x, q: float, M: float, theta_star: float | None = None):
    """Angles ``(theta_plus, theta_minus)`` with ``|M| X(theta) = x``.

    ``theta_plus`` lies in ``[-theta*, theta*]``; ``theta_minus`` lies on the
    complementary arc ``[theta*, 2 pi - theta*]`` through ``pi``.
    """
    _check_M(M)
    ts = solve_theta_star(q) if theta_star is None else theta_star
    xs = abs(M) * float(ek.X_theta(ts, q))
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > xs * (1 + 1e-15)):
        raise DomainError(f"x outside the cut [-{xs}, {xs}]")
    target = np.clip(x, -xs, xs) / abs(M)
    X = lambda t: ek.X_theta(t, q)
    tp = _bisect(X, -ts, ts, target)
    tm = _bisect(X, ts, 2 * math.pi - ts, target)
    return tp[()], tm[()]


def _f2_from_angles(tp, tm, q, M):
    fp = ek.X_prime(tp, q)
    fm = ek.X_prime(tm, q)
    with np.errstate(divide="ignore"):
        return (1.0 / fp - 1.0 / fm) / (math.pi * abs(M))


def f_second(x, q: float, M: float, theta_star: float | None = None):
    """``f''(x) = (1/F(theta+) - 1/F(theta-)) / (pi |M|)`` on the open cut."""
    tp, tm = invert_branches(x, q, M, theta_star)
    return _f2_from_angles(np.asarray(tp), np.asarray(tm), q, M)[()]


def f_first(x, q: float, M: float, theta_star: float | None = None):
    """``f'(x) = (theta+ - theta-)/pi + 1``; ``sign(x)`` outside the cut."""
    ts = solve_theta_star(q) if theta_star is None else theta_star
    xs = abs(M) * float(ek.X_theta(ts, q))
    x = np.asarray(x, dtype=float)
    flat = np.atleast_1d(x)
    inside = np.abs(flat) < xs
    out = np.sign(flat).astype(float)
    if np.any(inside):
        tp, tm = invert_branches(flat[inside], q, M, ts)
        out[inside] = (tp - tm) / math.pi + 1.0
    return out.reshape(x.shape)[()]


def _angle_grid(n: int) -> np.ndarray:
    return 2 * math.pi * np.arange(n) / n


def f_exact(x, q: float, M: float, n_theta: int = 4096):
    """Independent evaluation ``f(x) = (1/2pi) int |x - |M| X(theta)| dtheta``.

    The kink of the integrand limits the trapezoid rule to algebraic
    convergence; the two kink angles are split out and Gauss-Legendre is used
    on each smooth piece.
    """
    _check_M(M)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    ts = solve_theta_star(q)
    xs = abs(M) * float(ek.X_theta(ts, q))
    nodes, weights = np.polynomial.legendre.leggauss(max(64, n_theta // 32))
    out = np.empty_like(x)
    for k, xv in enumerate(x):
        if abs(xv) >= xs:
            out[k] = abs(xv)
            continue
        tp, tm = invert_branches(xv, q, M, ts)
        # on [tp, tm] the curve is above x; elsewhere (mod 2pi) below
        total = 0.0
        for a, b, sgn in ((tp, tm, -1.0), (tm, tp + 2 * math.pi, 1.0)):
            t = 0.5 * (b - a) * nodes + 0.5 * (a + b)
            vals = sgn * (xv - abs(M) * ek.X_theta(t, q))
            total += 0.5 * (b - a) * float(np.dot(weights, vals))
        out[k] = total / (2 * math.pi)
    return out[()] if out.size > 1 else float(out[0])


def edge_coefficient(q: float, M: float, theta_star: float | None = None) -> float:
    """``lim f''(x) sqrt(x* - x) = 2 / (pi sqrt(2 |M| |X''(theta*)|))``."""
    _check_M(M)
    ts = solve_theta_star(q) if theta_star is None else theta_star
    x2 = float(ek.X_second(ts, q))
    if not x2 < 0:
        raise DomainError("theta* is not a maximum of X")
    return 2.0 / (math.pi * math.sqrt(2.0 * abs(M) * abs(x2)))


@dataclass(frozen=True)
class LimitShape:
    """Solved limit shape sampled on a Chebyshev grid over ``[-x*, x*]``."""

    q: float
    M: float
    theta_star: float
    x_star: float
    x: np.ndarray = field(repr=False)
    theta_plus: np.ndarray = field(repr=False)
    theta_minus: np.ndarray = field(repr=False)
    f2: np.ndarray = field(repr=False)
    f1: np.ndarray = field(repr=False)
    f: np.ndarray = field(repr=False)
    edge_coefficient: float

    @property
    def Lambda_eff(self) -> float:
        """Confluent scale ``|M| sqrt(q)``."""
        return abs(self.M) * math.sqrt(self.q)

    def profile(self, x):
        """``f`` by interpolation on the grid; ``|x|`` off the cut."""
        x = np.asarray(x, dtype=float)
        return np.where(np.abs(x) >= self.x_star, np.abs(x), np.interp(x, self.x, self.f))[()]

    def f_first(self, x):
        return f_first(x, self.q, self.M, self.theta_star)

    def f_second(self, x):
        return f_second(x, self.q, self.M, self.theta_star)

    def curve(self, n_theta: int = 4096) -> np.ndarray:
        """Cut coordinate ``|M| X(theta)`` on a uniform angle grid."""
        return abs(self.M) * ek.X_theta(_angle_grid(n_theta), self.q)

    def integrate(self, g, n_theta: int = 4096):
        """``int f''(y) g(y) dy`` via the angle substitution (``g`` vectorized)."""
        return np.mean(g(self.curve(n_theta))) * 2.0

    def Y(self, x, n_theta: int = 4096):
        """``exp((1/2) int f''(y) log(x - y) dy)`` for ``x`` off the cut."""
        ys = self.curve(n_theta)
        x = np.asarray(x, dtype=complex)
        return np.exp(np.mean(np.log(x[..., None] - ys), axis=-1))[()]

    def columns(self) -> dict[str, np.ndarray]:
        return {k: getattr(self, k) for k in ("x", "theta_plus", "theta_minus", "f2", "f1", "f")}

    def to_csv(self, path, header: dict | None = None, extra: dict[str, np.ndarray] | None = None) -> Path:
        """Write the grid columns (plus ``extra``) and a JSON sidecar next to it.

        The first line is ``#`` followed by the JSON of ``header`` (default: the sidecar).
        """
        path = Path(path)
        cols = self.columns() | (extra or {})
        with path.open("w", newline="") as fh:
            fh.write("# " + json.dumps(header or self.sidecar()) + "\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(cols))
            for row in zip(*cols.values()):
                w.writerow([repr(float(v)) for v in row])
        path.with_suffix(".json").write_text(json.dumps(self.sidecar(), indent=2) + "\n")
        return path

    def sidecar(self) -> dict:
        return {
            "q": self.q,
            "M": self.M,
            "Lambda_eff": self.Lambda_eff,
            "theta_star": self.theta_star,
            "x_star": self.x_star,
            "edge_coefficient": self.edge_coefficient,
        }

    def to_dict(self) -> dict:
        d = self.sidecar()
        for k in ("x", "theta_plus", "theta_minus", "f2", "f1", "f"):
            d[k] = [float(v) if np.isfinite(v) else None for v in getattr(self, k)]
        return d


def solve_limit_shape(q: float, M: float | None = None, Lambda: float | None = None, n_grid: int = 513) -> LimitShape:
    """Solve on a Chebyshev grid; pass either ``M < 0`` or the confluent scale ``Lambda``."""
    if (M is None) == (Lambda is None):
        raise DomainError("give exactly one of M and Lambda")
    if M is None:
        M = inozemtsev_M(q, Lambda)
    _check_M(M)
    if n_grid < 3:
        raise DomainError("grid needs at least 3 points")
    ts = solve_theta_star(q)
    xs = abs(M) * float(ek.X_theta(ts, q))
    # x = x* cos(u), u from pi down to 0, so x ascends
    u = math.pi * np.arange(n_grid - 1, -1, -1) / (n_grid - 1)
    x = xs * np.cos(u)
    x[0], x[-1] = -xs, xs
    tp, tm = invert_branches(x, q, M, ts)
    tp[0], tm[0], tp[-1], tm[-1] = -ts, 2 * math.pi - ts, ts, ts
    f1 = (tp - tm) / math.pi + 1.0
    f2 = _f2_from_angles(tp, tm, q, M)
    f2[0] = f2[-1] = np.inf
    # trapezoid in u: df = f'(x) dx = -f'(x*cos u) x* sin(u) du
    integrand = f1 * xs * np.sin(u)
    du = math.pi / (n_grid - 1)
    # integrate from x* (u = 0, last index) inward
    rev = integrand[::-1]
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (rev[1:] + rev[:-1]) * du)])
    f = (xs - cum)[::-1]
    f = 0.5 * (f + f[::-1])
    return LimitShape(q, M, ts, xs, x, tp, tm, f2, f1, f, edge_coefficient(q, M, ts))


class EdgeFit(NamedTuple):
    exponent: float
    coefficient: float
    direct: float


def edge_fit(shape: LimitShape, d_min: float = 1e-6, d_max: float = 1e-4, n: int = 24) -> EdgeFit:
    """Fit ``f'' ~ c (x* - x)**s`` near the right end of the cut.

    The coefficient is the ``d -> 0`` intercept of ``f'' sqrt(d)`` fitted linearly in ``d``.
    """
    d = shape.x_star * np.geomspace(d_min, d_max, n)
    f2 = np.asarray(f_second(shape.x_star - d, shape.q, shape.M, shape.theta_star))
    slope = np.polyfit(np.log(d), np.log(f2), 1)[0]
    intercept = np.polyfit(d, f2 * np.sqrt(d), 1)[1]
    return EdgeFit(float(slope), float(intercept), shape.edge_coefficient)


@dataclass(frozen=True)
class VKShape:
    """Arcsine-law profile of scale ``Lambda`` (cut ``[-2 Lambda, 2 Lambda]``)."""

    Lambda: float

    def __post_init__(self):
        if not self.Lambda > 0:
            raise DomainError("Lambda must be positive")

    @property
    def x_star(self) -> float:
        return 2.0 * self.Lambda

    def f(self, x):
        x = np.asarray(x, dtype=float)
        L = self.Lambda
        xi = np.clip(x / (2 * L), -1, 1)
        inside = (2 / math.pi) * (x * np.arcsin(xi) + np.sqrt(np.maximum(4 * L * L - x * x, 0.0)))
        return np.where(np.abs(x) >= 2 * L, np.abs(x), inside)[()]

    def f1(self, x):
        x = np.asarray(x, dtype=float)
        return ((2 / math.pi) * np.arcsin(np.clip(x / (2 * self.Lambda), -1, 1)))[()]

    def f2(self, x):
        x = np.asarray(x, dtype=float)
        xi = x / (2 * self.Lambda)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = 1.0 / (math.pi * self.Lambda * np.sqrt(1 - xi * xi))
        return np.where(np.abs(xi) < 1, val, 0.0)[()]


def vk_closed_form(Lambda: float) -> VKShape:
    return VKShape(Lambda)


def second_moment(shape: LimitShape, n_theta: int = 4096) -> float:
    """``int f''(x) x^2 dx``; ``4 hbar^2`` times the expected number of boxes."""
    return float(shape.integrate(lambda y: y * y, n_theta))


def integral_of_f2(shape: LimitShape, n_nodes: int = 200) -> float:
    """``int f''`` from pointwise values, with ``x = x* cos(u)`` absorbing the edge singularities."""
    nodes, weights = np.polynomial.legendre.leggauss(n_nodes)
    u = 0.5 * math.pi * (nodes + 1)
    vals = np.asarray(shape.f_second(shape.x_star * np.cos(u))) * shape.x_star * np.sin(u)
    return float(0.5 * math.pi * np.dot(weights, vals))


@dataclass
class IntegralEquationReport:
    max_residual: float
    residuals: list[float]
    integral_f2: float
    decay_ratio: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "identity": "integral-equation",
            "samples": len(self.residuals),
            "max_residual": self.max_residual,
            "integral_f2": self.integral_f2,
            "decay_ratio": self.decay_ratio,
            "pass": self.passed,
        }


def verify_integral_equation(
    shape: LimitShape, n_points: int = 20, seed: int = 0, n_theta: int = 4096, tol: float = 1e-6
) -> IntegralEquationReport:
    """Compare ``1/F_q(z(x))`` with the two-cut Cauchy transform of ``f''`` at off-cut points.

    Points are drawn as ``x = x(z)`` for ``z`` inside the fundamental cylinder
    and mapped back with :func:`~ells.elliptic.z_of_x`.
    """
    q, M = shape.q, shape.M
    m = 1j * M
    ys = shape.curve(n_theta)
    rng = np.random.default_rng(seed)

    def rhs(x):
        return (m / (2 * math.pi)) * np.mean(1.0 / (x - ys) - 1.0 / (x - ys + m)) * 2 * math.pi

    residuals = []
    while len(residuals) < n_points:
        z = q ** (0.5 * rng.uniform(-0.8, 0.8)) * np.exp(1j * rng.uniform(-math.pi, math.pi))
        x = complex(ek.x_of_z(z, q, M))
        zz = ek.z_of_x(x, q, M, z0=z * (1 + 1e-3))
        lhs = 1.0 / ek.F_q(zz, q)
        residuals.append(float(abs(lhs - rhs(x)) / max(1.0, abs(lhs))))
    # both sides decay like (m/x)^2
    xb = 10 * shape.x_star * np.exp(0.3j)
    zb = ek.z_of_x(xb, q, M)
    decay_ratio = float(abs((1.0 / ek.F_q(zb, q)) / rhs(xb)))
    total = integral_of_f2(shape)
    worst = max(residuals)
    ok = worst < tol and abs(total - 2.0) < 1e-6 and abs(decay_ratio - 1) < 0.01
    return IntegralEquationReport(worst, residuals, total, decay_ratio, ok)


@dataclass
class SeriesFit:
    a: np.ndarray
    b: np.ndarray
    residual_theta: float
    residual_x: float
    condition: float

    @property
    def a1(self) -> float:
        return float(self.a[0])

    @property
    def a2(self) -> float:
        return float(self.a[1])

    @property
    def b1(self) -> float:
        return float(self.b[0])

    def to_dict(self) -> dict:
        return {
            "a": [float(v) for v in self.a],
            "b": [float(v) for v in self.b],
            "residual_theta": self.residual_theta,
            "residual_x": self.residual_x,
            "condition": self.condition,
        }


DEFAULT_SERIES_Q = (1e-6, 1e-5, 1e-4, 1e-3)


def series_coefficients(q_list: Sequence[float] = DEFAULT_SERIES_Q, n_terms: int = 3) -> SeriesFit:
    """Least-squares fit of ``(theta* - pi/2)/q^{1/2} = a1 + a2 q + ...`` and ``(x*/2Lambda - 1)/q = b1 + b2 q + ...``."""
    q = np.asarray(sorted(q_list), dtype=float)
    if len(q) < 4 or q[0] <= 0 or q[-1] > 1e-3:
        raise DomainError("need at least 4 nomes in (0, 1e-3]")
    ts = np.array([solve_theta_star(v) for v in q])
    xs = np.array([cut_endpoint(v, inozemtsev_M(v), t) for v, t in zip(q, ts)]) / 2.0
    A = np.vander(q, n_terms, increasing=True)
    ya = (ts - math.pi / 2) / np.sqrt(q)
    yb = (xs - 1.0) / q
    a, ra, _, sv = np.linalg.lstsq(A, ya, rcond=None)
    b, rb, _, _ = np.linalg.lstsq(A, yb, rcond=None)
    res = lambda r, y, c: float(np.max(np.abs(A @ c - y)))
    return SeriesFit(a, b, res(ra, ya, a), res(rb, yb, b), float(sv[0] / sv[-1]))


def fprime_correction(q: float, y) -> np.ndarray:
    """``(f'(y x*) - (2/pi) arcsin y) / q`` for the confluent shape with ``Lambda = 1``.

    Tends to ``(4/pi) y sqrt(1 - y^2)`` as ``q -> 0``.
    """
    M = inozemtsev_M(q)
    ts = solve_theta_star(q)
    xs = cut_endpoint(q, M, ts)
    y = np.asarray(y, dtype=float)
    return (np.asarray(f_first(y * xs, q, M, ts)) - (2 / math.pi) * np.arcsin(y)) / q


def lambert_solve(t1: float, Lambda: float) -> tuple[float, float]:
    """Solve ``Lambda^2 = L^2 exp(-2 t1 L^2)`` for ``L`` on the branch through ``L = Lambda`` at ``t1 = 0``.

    Returns ``(L, -t1 L^2)``.
    """
    if not Lambda > 0:
        raise DomainError("Lambda must be positive")
    s = Lambda * Lambda
    if t1 == 0:
        return Lambda, 0.0
    h = lambda u: u * math.exp(-2 * t1 * u) - s
    if t1 > 0:
        # u e^{-2 t1 u} rises to 1/(2 e t1) at u = 1/(2 t1)
        top = 1.0 / (2 * t1)
        if h(top) < 0:
            raise NoSolutionError(f"t1={t1} is beyond the convergence radius (need 2 e t1 Lambda^2 <= 1)")
        if h(top) == 0:
            u = top
        else:
            u = brentq(h, s, top, xtol=1e-16, rtol=1e-15)
    else:
        u = brentq(h, 0.0, s, xtol=1e-16, rtol=1e-15)
    L = math.sqrt(u)
    return L, -t1 * u


def normalized_family(qs: Sequence[float] = (0.0, 0.05, 0.2, 0.5), n_grid: int = 257) -> dict[float, tuple[np.ndarray, np.ndarray]]:
    """Profiles normalized to a unit half-cut: ``|M| = 1 / X(theta*)``; ``q = 0`` is the arcsine law with ``2 Lambda = 1``."""
    out = {}
    for q in qs:
        if q == 0:
            vk = VKShape(0.5)
            x = np.cos(math.pi * np.arange(n_grid - 1, -1, -1) / (n_grid - 1))
            out[q] = (x, np.asarray(vk.f(x)))
        else:
            ts = solve_theta_star(q)
            shape = solve_limit_shape(q, M=-1.0 / float(ek.X_theta(ts, q)), n_grid=n_grid)
            out[q] = (shape.x, shape.f)
    return out
