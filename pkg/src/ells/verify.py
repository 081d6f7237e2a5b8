"""Named verification suites shared by the command line and the test-suite."""

from __future__ import annotations

import cmath
import math
from typing import Callable

import numpy as np

from . import elliptic as ek
from .measures import EnsembleParams
from .qq import (
    IdentityReport,
    verify_chi_elliptic_identity,
    verify_chi_rational_identity,
    verify_factorization,
    verify_master_equation,
)

__all__ = ["SUITES", "DEFAULT_ORDER", "run_suite", "special_function_report", "random_off_lattice", "master_equation_report"]


def random_off_lattice(rng: np.random.Generator, n: int, hbar: float, cmax: int, clearance: float = 0.1) -> list[complex]:
    """Complex samples at distance ``> clearance * hbar`` from every ``hbar c``, ``|c| <= cmax``."""
    out = []
    while len(out) < n:
        x = complex(rng.uniform(-3, 3), rng.uniform(-1.5, 1.5)) * hbar
        if min(abs(x - hbar * c) for c in range(-cmax, cmax + 1)) > clearance * hbar:
            out.append(x)
    return out


def rational_report(order: int = 6, seed: int = 0, samples: int = 10, tol: float = 1e-9) -> IdentityReport:
    rng = np.random.default_rng(seed)
    return verify_chi_rational_identity(order, random_off_lattice(rng, samples, 1.0, order + 1), 1.0, tol)


def elliptic_report(order: int = 4, seed: int = 0, samples: int = 10, tol: float = 1e-9) -> IdentityReport:
    rng = np.random.default_rng(seed)
    params, xs = [], []
    for _ in range(samples):
        p = EnsembleParams(M=float(rng.uniform(0.3, 1.5)), hbar=float(rng.uniform(0.2, 1.0)))
        params.append(p)
        xs.append(complex(rng.uniform(-2, 2), rng.uniform(0.2, 1.0) * rng.choice([-1, 1])))
    return verify_chi_elliptic_identity(params, order, xs, tol)


def factorization_report(order: int = 5, seed: int = 0, samples: int = 5, tol: float = 1e-9) -> IdentityReport:
    return verify_factorization(order, samples, seed, tol=tol)


def master_equation_report(
    order: int = 0, seed: int = 0, samples: int = 10, tol: float = 1e-6, q: float = 0.2, Lambda: float = 1.0
) -> IdentityReport:
    from .limitshape import solve_limit_shape

    shape = solve_limit_shape(q, Lambda=Lambda, n_grid=65)
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < samples:
        x = complex(rng.normal(scale=shape.x_star), rng.uniform(0.3, 1.0) * rng.choice([-1, 1]))
        pts.append((x, cmath.exp(1j * rng.uniform(-math.pi, math.pi))))
    return verify_master_equation(shape.Y, q, shape.M, pts, tol)


def special_function_report(order: int = 0, seed: int = 0, samples: int = 20, tol: float = 1e-8) -> IdentityReport:
    """Triple product, quasiperiodicity and the three-way ``X'`` cross-check.

    Each entry of ``residuals`` is the worst case of one family; the report
    passes when the triple product and quasiperiodicity are below ``1e-12``
    and the derivative relations below ``tol``.
    """
    rng = np.random.default_rng(seed)
    triple = quasi = 0.0
    for _ in range(samples):
        q = float(rng.uniform(0.05, 0.7))
        z = cmath.rect(math.exp(rng.uniform(math.log(0.3), math.log(3.0))), rng.uniform(-math.pi, math.pi))
        a, b = ek.theta(z, q), ek.theta_sum(z, q)
        triple = max(triple, abs(a - b) / max(abs(a), 1e-300))
        M = float(rng.uniform(0.2, 2.0))
        zc, _ = ek.canonicalize(z, q)
        dx = ek.x_of_z(q * zc, q, M) - ek.x_of_z(zc, q, M)
        quasi = max(quasi, abs(dx - 1j * M) / M)
    deriv = offset = 0.0
    for _ in range(samples):
        q = float(rng.uniform(0.05, 0.5))
        th = float(rng.uniform(0.1, math.pi - 0.1))
        tau = ek.tau_of_q(q)
        u = tau / 2 + th / (2 * math.pi)
        h = 1e-6
        fd = (ek.X_theta(th + h, q) - ek.X_theta(th - h, q)) / (2 * h)
        fq = ek.X_prime(th, q)
        wp = ek.weierstrass_p_eisenstein(u, tau)
        vals = [fd, fq, -wp / (4 * math.pi**2)]
        deriv = max(deriv, max(abs(vals[i] - vals[j]) for i in range(3) for j in range(i + 1, 3)))
        offset = max(offset, abs(wp - ek.weierstrass_p(u, tau) - ek.eisenstein_g2(q)))
    residuals = [float(v) for v in (triple, quasi, deriv, offset)]
    ok = triple < 1e-12 and quasi < 1e-12 and deriv < tol and offset < tol
    return IdentityReport("special-fn", order, samples, max(residuals), bool(ok), residuals)


SUITES: dict[str, Callable[..., IdentityReport]] = {
    "rational-chi": rational_report,
    "elliptic-chi": elliptic_report,
    "factorization": factorization_report,
    "master-eq": master_equation_report,
    "special-fn": special_function_report,
}

DEFAULT_ORDER = {"rational-chi": 6, "elliptic-chi": 4, "factorization": 5, "master-eq": 0, "special-fn": 0}
DEFAULT_TOL = {"rational-chi": 1e-9, "elliptic-chi": 1e-9, "factorization": 1e-9, "master-eq": 1e-6, "special-fn": 1e-8}


def run_suite(name: str, order: int | None = None, seed: int = 0, samples: int | None = None, tol: float | None = None) -> IdentityReport:
    fn = SUITES[name]
    kw = {"order": DEFAULT_ORDER[name] if order is None else order, "seed": seed, "tol": DEFAULT_TOL[name] if tol is None else tol}
    if samples is not None:
        kw["samples"] = samples
    return fn(**kw)
