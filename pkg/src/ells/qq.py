"""Y-observables, qq-characters and the identities they satisfy.

Identity checks are numeric in ``x``, ``z``, ``M``, ``hbar`` and formal in the
expansion variable (``q`` or ``Lambda**2``), which is carried by
:class:`~ells.series.QSeries`.
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, PoleError, SingularParameterError
from .measures import EnsembleParams
from .partitions import Box, Partition, boundary_boxes, enumerate_partitions
from .series import QSeries

__all__ = [
    "POLE_TOL",
    "YEvaluation",
    "IdentityReport",
    "TimesPolynomial",
    "y_product",
    "y_boundary",
    "y_eval",
    "chi_rational",
    "verify_chi_rational_identity",
    "rational_chi_expectation",
    "residue_at_content",
    "truncated_chi_average",
    "aux_weight",
    "chi_elliptic",
    "verify_chi_elliptic_identity",
    "chi_boundary_form",
    "chi_column_form",
    "theta_transform",
    "factorization_lhs",
    "random_rational_function",
    "verify_factorization",
    "factorization_product",
    "verify_master_equation",
]

POLE_TOL = 1e-12


@dataclass(frozen=True)
class YEvaluation:
    """``Y(x)`` of a diagram; ``pole_flags`` lists boxes whose content sits within ``POLE_TOL`` of ``x``."""

    x: complex
    value: complex
    pole_flags: tuple[Box, ...] = ()
    product_value: complex = complex("nan")


@dataclass
class IdentityReport:
    identity: str
    D: int
    samples: int
    max_residual: float
    passed: bool
    residuals: list[float] = field(default_factory=list)
    rejected: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "identity": self.identity,
            "D": self.D,
            "samples": self.samples,
            "max_residual": self.max_residual,
            "pass": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


@dataclass(frozen=True)
class TimesPolynomial:
    """``t_hat(x) = sum_k c_k x**k`` (``k >= 1``, so ``t_hat(0) = 0``)."""

    coefficients: tuple[complex, ...] = ()

    def t_hat(self, x):
        return sum(c * x ** (k + 1) for k, c in enumerate(self.coefficients))

    def t(self, x, m):
        """``t(x) = t_hat(x) - t_hat(x - m)``."""
        return self.t_hat(x) - self.t_hat(x - m)

    @property
    def is_zero(self) -> bool:
        return not any(self.coefficients)


ZERO_TIMES = TimesPolynomial()


# ---------------------------------------------------------------------------
# Y-observable


def y_product(lam: Partition, x: complex, hbar: float) -> complex:
    """``x prod_boxes ((x - hbar c)^2 - hbar^2) / (x - hbar c)^2``."""
    v = complex(x)
    for b in lam.boxes():
        d = x - hbar * b.content
        if d == 0:
            raise PoleError(f"x hits content {b.content} of box {tuple(b)}", where=b.content)
        v *= (d * d - hbar * hbar) / (d * d)
    return v


def y_boundary(lam: Partition, x: complex, hbar: float) -> complex:
    """Ratio of addable over removable ``(x - hbar c)`` factors."""
    addable, removable = boundary_boxes(lam)
    num = math.prod((x - hbar * b.content for b in addable), start=1 + 0j)
    den = math.prod((x - hbar * b.content for b in removable), start=1 + 0j)
    if den == 0:
        c = next(b.content for b in removable if x - hbar * b.content == 0)
        raise PoleError(f"x sits on the pole at content {c}", where=c)
    return num / den


def y_eval(lam: Partition, x: complex, hbar: float) -> YEvaluation:
    if not hbar > 0:
        raise DomainError("hbar must be positive")
    x = complex(x)
    _, removable = boundary_boxes(lam)
    flags = tuple(b for b in removable if abs(x - hbar * b.content) < POLE_TOL)
    value = y_boundary(lam, x, hbar)
    try:
        prod = y_product(lam, x, hbar)
    except PoleError:
        prod = complex("nan")
    return YEvaluation(x, value, flags, prod)


def chi_rational(lam: Partition, x: complex, Lambda: float, hbar: float) -> complex:
    """``Y + Lambda^2 / Y``."""
    y = y_boundary(lam, x, hbar)
    if y == 0:
        raise ZeroDivisionError(f"Y vanishes at x={x}")
    return y + Lambda**2 / y


# ---------------------------------------------------------------------------
# rational (macrocanonical) identity


def _pole_distance(x: complex, hbar: float, cmax: int) -> float:
    return min(abs(x - hbar * c) for c in range(-cmax, cmax + 1))


def rational_chi_expectation(x: complex, hbar: float, D: int) -> QSeries:
    """``<Y + s/Y>`` as a series in ``s = Lambda**2`` under weights ``s^N hbar^-2N / prod h^2``."""
    num = np.zeros(D + 2, dtype=complex)
    Z = np.zeros(D + 1, dtype=complex)
    for lam in enumerate_partitions(D):
        n = lam.size
        w = hbar ** (-2 * n) / math.prod(h * h for h in lam.hooks)
        y = y_boundary(lam, x, hbar)
        Z[n] += w
        num[n] += w * y
        num[n + 1] += w / y
    return QSeries(num[: D + 1]) / QSeries(Z)


def _coefficient_residual(series: QSeries, x: complex) -> float:
    target = np.zeros(series.order + 1, dtype=complex)
    target[0] = x
    return float(np.max(np.abs(series.coeffs - target)) / max(1.0, abs(x)))


def verify_chi_rational_identity(
    D: int, x_samples: Sequence[complex], hbar: float = 1.0, tol: float = 1e-9, min_pole_distance: float = 1e-6
) -> IdentityReport:
    """Check ``<chi(x)> = x`` coefficient by coefficient in ``Lambda**2`` up to order ``D``."""
    if D < 0:
        raise DomainError("D must be >= 0")
    residuals, rejected = [], []
    for x in x_samples:
        x = complex(x)
        if _pole_distance(x, hbar, D + 1) < min_pole_distance:
            rejected.append(x)
            continue
        residuals.append(_coefficient_residual(rational_chi_expectation(x, hbar, D), x))
    worst = max(residuals, default=0.0)
    ok = bool(residuals) and worst < tol
    return IdentityReport("rational-chi", D, len(residuals), worst, ok, residuals, rejected)


def residue_at_content(
    c: int, D: int, hbar: float, Lambda: float, radius: float | None = None, n_points: int = 256
) -> complex:
    """Residue of the truncated ``<chi(x)>`` (numeric ``Lambda``) at ``x = hbar c``, by the trapezoid rule on a circle."""
    r = 0.25 * hbar if radius is None else radius
    phis = 2 * np.pi * np.arange(n_points) / n_points
    total = 0j
    for ph in phis:
        dx = r * cmath.exp(1j * ph)
        total += truncated_chi_average(hbar * c + dx, hbar, Lambda, D) * dx
    return total / n_points


def truncated_chi_average(x: complex, hbar: float, Lambda: float, D: int) -> complex:
    """Ratio of numeric sums over ``|lam| <= D`` at a fixed ``Lambda`` (not re-expanded in ``Lambda**2``)."""
    Q = (Lambda / hbar) ** 2
    num, Z = [], []
    for lam in enumerate_partitions(D):
        w = Q**lam.size / math.prod(h * h for h in lam.hooks)
        Z.append(w)
        num.append(w * chi_rational(lam, x, Lambda, hbar))
    return complex(math.fsum(v.real for v in num), math.fsum(v.imag for v in num)) / math.fsum(Z)


# ---------------------------------------------------------------------------
# elliptic identity


def aux_weight(nu: Partition, p: EnsembleParams) -> float:
    """Auxiliary hook product with the roles of mass and box size swapped: ``prod(1 + hbar^2/(M h)^2)``."""
    if p.M == 0:
        raise SingularParameterError("the auxiliary weight needs M != 0")
    r = (p.hbar / p.M) ** 2
    return math.prod((1.0 + r / (h * h) for h in nu.hooks), start=1.0)


def _ratio_over_boundary(nu: Partition, Yfun: Callable[[complex], complex], x: complex, m: complex) -> complex:
    addable, removable = boundary_boxes(nu)
    v = 1 + 0j
    for b in addable:
        v *= Yfun(x + m * b.content)
    for b in removable:
        y = Yfun(x + m * b.content)
        if y == 0:
            raise PoleError(f"Y vanishes at the auxiliary box {tuple(b)}", where=b)
        v /= y
    return v


def chi_elliptic(lam: Partition, x: complex, p: EnsembleParams, D: int) -> QSeries:
    """Unnormalized auxiliary sum ``sum_nu q^|nu| w_aux(nu) prod Y(x + m c)^(+-1)`` to order ``q^D``."""
    m = p.m

    def Yl(u):
        try:
            return y_boundary(lam, u, p.hbar)
        except PoleError as exc:
            raise PoleError(f"argument {u} collides with a pole of Y for {lam}", where=exc.where) from exc

    c = np.zeros(D + 1, dtype=complex)
    for nu in enumerate_partitions(D):
        c[nu.size] += aux_weight(nu, p) * _ratio_over_boundary(nu, Yl, x, m)
    return QSeries(c)


def _aux_normalization(p: EnsembleParams, D: int) -> QSeries:
    c = np.zeros(D + 1, dtype=complex)
    for nu in enumerate_partitions(D):
        c[nu.size] += aux_weight(nu, p)
    return QSeries(c)


def elliptic_chi_expectation(x: complex, p: EnsembleParams, D: int) -> QSeries:
    """``<chi(x)>`` under the elliptic measure, normalized by both the main and auxiliary sums."""
    num = QSeries.zeros(D)
    Z = np.zeros(D + 1, dtype=complex)
    r = (p.M / p.hbar) ** 2
    for lam in enumerate_partitions(D):
        w = math.prod((1.0 + r / (h * h) for h in lam.hooks), start=1.0)
        Z[lam.size] += w
        chi = chi_elliptic(lam, x, p, D - lam.size)
        num = num + QSeries(chi.coeffs, D).shift(lam.size) * w
    return num / QSeries(Z) / _aux_normalization(p, D)


def verify_chi_elliptic_identity(
    p: EnsembleParams | Sequence[EnsembleParams], D: int, x_samples: Sequence[complex], tol: float = 1e-9
) -> IdentityReport:
    """Check that ``<chi(x)>`` has no ``q``-corrections: ``x + 0 q + ... + 0 q^D``.

    ``p`` may be a single parameter set or one per sample.
    """
    params = [p] * len(x_samples) if isinstance(p, EnsembleParams) else list(p)
    if len(params) != len(x_samples):
        raise DomainError("need one parameter set per sample")
    residuals, rejected = [], []
    for x, pp in zip(x_samples, params):
        try:
            s = elliptic_chi_expectation(complex(x), pp, D)
        except PoleError:
            rejected.append(x)
            continue
        residuals.append(_coefficient_residual(s, complex(x)))
    worst = max(residuals, default=0.0)
    return IdentityReport("elliptic-chi", D, len(residuals), worst, bool(residuals) and worst < tol, residuals, rejected)


# ---------------------------------------------------------------------------
# factorization lemma


def chi_boundary_form(Yfun: Callable, x: complex, m: complex, D: int) -> QSeries:
    """``sum_lam q^|lam| prod_{add} Y(x+mc) / prod_{rem} Y(x+mc)`` without auxiliary weights."""
    c = np.zeros(D + 1, dtype=complex)
    for lam in enumerate_partitions(D):
        c[lam.size] += _ratio_over_boundary(lam, Yfun, x, m)
    return QSeries(c)


def chi_column_form(Yfun: Callable, x: complex, m: complex, D: int, times: TimesPolynomial = ZERO_TIMES) -> QSeries:
    """Column-by-column form of the character with insertion ``exp(sum_boxes t(x + m c))``."""
    c = np.zeros(D + 1, dtype=complex)
    for lam in enumerate_partitions(D):
        cols = lam.transpose().rows
        v = 1 + 0j
        if not times.is_zero:
            v *= cmath.exp(sum(times.t(x + m * b.content, m) for b in lam.boxes()))
        for j, lj in enumerate(cols, start=1):
            v *= Yfun(x + m * (lj - j + 1)) / Yfun(x + m * (lj - j))
        v *= Yfun(x - m * lam.row(1))
        c[lam.size] += v
    return QSeries(c)


def theta_transform(
    chi_values: Callable[[int], QSeries],
    z: complex,
    D: int,
    times: TimesPolynomial = ZERO_TIMES,
    *,
    x: complex = 0.0,
    m: complex = 1.0,
) -> QSeries:
    """``sum_n (-z)^n q^{(n^2-n)/2} e^{...} chi(x + m n)``, truncated exactly at ``q^D``.

    For ``n >= 1`` the prefactor is ``exp(sum_{j<n} t_hat(x + j m))``; for ``n = -k``
    it is ``exp(-sum_{j=1..k} t_hat(x - j m))``.
    """
    if z == 0:
        raise DomainError("z must be nonzero")
    out = chi_values(0)
    if out.order != D:
        raise DomainError("chi_values must return series of order D")
    n = 1
    while (n * n - n) // 2 <= D:
        e = (n * n - n) // 2
        pref = (-z) ** n
        if not times.is_zero:
            pref *= cmath.exp(sum(times.t_hat(x + j * m) for j in range(n)))
        out = out + chi_values(n).shift(e) * pref
        n += 1
    k = 1
    while (k * k + k) // 2 <= D:
        e = (k * k + k) // 2
        pref = (-z) ** (-k)
        if not times.is_zero:
            pref *= cmath.exp(-sum(times.t_hat(x - j * m) for j in range(1, k + 1)))
        out = out + chi_values(-k).shift(e) * pref
        k += 1
    return out


def factorization_lhs(
    Yfun: Callable,
    x: complex,
    z: complex,
    m: complex,
    D: int,
    times: TimesPolynomial = ZERO_TIMES,
    n_factors: int | None = None,
) -> QSeries:
    """``Y(x) prod_{n>=0}(1 - z q^n e^{t_hat(x+nm)} Y(x+(n+1)m)/Y(x+nm)) prod_{n>=1}(1 - q^n/z ...)``."""
    N = D if n_factors is None else n_factors
    y0 = Yfun(x)
    if y0 == 0:
        raise ZeroDivisionError("Y(x) vanishes")
    out = QSeries.constant(y0, D)
    for n in range(0, N + 1):
        a = z * Yfun(x + (n + 1) * m) / Yfun(x + n * m)
        if not times.is_zero:
            a *= cmath.exp(times.t_hat(x + n * m))
        out = out * (1 - QSeries.monomial(a, n, D))
    for n in range(1, N + 1):
        a = Yfun(x - n * m) / Yfun(x - (n - 1) * m) / z
        if not times.is_zero:
            a *= cmath.exp(-times.t_hat(x - n * m))
        out = out * (1 - QSeries.monomial(a, n, D))
    return out


def random_rational_function(
    rng: np.random.Generator, x: complex, m: complex, degree: int = 3, clearance: float = 0.05, span: int = 12
) -> Callable[[complex], complex]:
    """Ratio of monic polynomials (numerator degree ``degree``) with roots kept off ``x + m Z``."""

    def draw(k):
        roots = []
        while len(roots) < k:
            r = complex(rng.normal(), rng.normal())
            if min(abs(r - x - j * m) for j in range(-span, span + 1)) > clearance:
                roots.append(r)
        return np.array(roots)

    num = draw(degree)
    den = draw(max(degree - 1, 0))
    return lambda u: complex(np.prod(u - num) / np.prod(u - den))


def verify_factorization(
    D: int = 5, n_trials: int = 5, seed: int = 0, degree: int = 3, tol: float = 1e-9
) -> IdentityReport:
    """Both sides of the factorization identity for random ``Y``, ``t_hat`` and ``z``.

    Each trial also recomputes the product side with twice as many factors
    and requires the result to be unchanged.
    """
    rng = np.random.default_rng(seed)
    residuals = []
    for _ in range(n_trials):
        m = complex(rng.uniform(0.2, 0.6), rng.uniform(-0.4, 0.4))
        x = complex(rng.normal(), rng.normal())
        z = cmath.rect(rng.uniform(0.5, 1.5), rng.uniform(-math.pi, math.pi))
        Y = random_rational_function(rng, x, m, degree)
        times = TimesPolynomial(tuple(rng.normal(scale=0.1, size=rng.integers(1, 4))))
        lhs = factorization_lhs(Y, x, z, m, D, times)
        doubled = factorization_lhs(Y, x, z, m, D, times, n_factors=2 * D)
        rhs = theta_transform(lambda n: chi_column_form(Y, x + n * m, m, D, times), z, D, times, x=x, m=m)
        scale = max(1.0, float(np.max(np.abs(lhs.coeffs))))
        res = max(np.max(np.abs(lhs.coeffs - rhs.coeffs)), np.max(np.abs(lhs.coeffs - doubled.coeffs))) / scale
        residuals.append(float(res))
    worst = max(residuals, default=0.0)
    return IdentityReport("factorization", D, n_trials, worst, worst < tol, residuals)


# ---------------------------------------------------------------------------
# master equation at numeric q


def factorization_product(Yfun: Callable, x: complex, z: complex, q: float, m: complex, tol: float = 1e-17) -> complex:
    """Numeric value of the product side at a real nome ``q`` (``t_hat = 0``)."""
    v = complex(Yfun(x))
    n = 0
    while True:
        qn = q**n
        v *= 1 - z * qn * Yfun(x + (n + 1) * m) / Yfun(x + n * m)
        if n >= 1:
            v *= 1 - qn / z * Yfun(x - n * m) / Yfun(x - (n - 1) * m)
        n += 1
        if q == 0 or q**n * max(abs(z), 1 / abs(z)) < tol:
            break
    return v


def verify_master_equation(
    limit_Y: Callable, q: float, M: float, points: Sequence[tuple[complex, complex]], tol: float = 1e-6
) -> IdentityReport:
    """Compare ``x theta(z) + m z theta'(z)`` with ``phi(q)`` times the product side at ``(x, z)`` pairs."""
    from .elliptic import euler_phi, theta, theta_zderiv

    m = 1j * M
    phi = euler_phi(q)
    residuals = []
    for x, z in points:
        lhs = x * theta(z, q) + m * theta_zderiv(z, q)
        rhs = phi * factorization_product(limit_Y, x, z, q, m)
        residuals.append(float(abs(lhs - rhs) / max(1.0, abs(lhs), abs(rhs))))
    worst = max(residuals, default=0.0)
    return IdentityReport("master-eq", 0, len(residuals), worst, bool(residuals) and worst < tol, residuals)
