"""Theta-type special functions of a real nome ``0 <= q < 1``.

All q-series are truncated by a geometric majorant: a series whose terms are
bounded by ``scale * q**n`` is cut once ``scale * q**N / (1 - q)`` drops below
``TAIL_TOL`` relative to unity. Functions accept scalars or numpy arrays.

The mass enters through ``m = i*M`` (``M`` real); see :mod:`ells.measures`.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import BranchError, DomainError, PoleError

__all__ = [
    "TAIL_TOL",
    "n_terms",
    "theta",
    "theta_sum",
    "theta_zderiv",
    "euler_phi",
    "F_q",
    "F_q_zderiv",
    "x_of_z",
    "z_of_x",
    "canonicalize",
    "g_q",
    "X_theta",
    "X_prime",
    "X_second",
    "tau_of_q",
    "weierstrass_p",
    "eisenstein_g2",
    "weierstrass_p_eisenstein",
    "eisenstein_e6",
    "eisenstein_e6_factor",
    "gamma_printed",
]

TAIL_TOL = 1e-17
_MAX_TERMS = 20000


def n_terms(q: float, scale: float = 1.0, tol: float = TAIL_TOL) -> int:
    """Smallest ``N`` with ``scale * q**(N+1) / (1-q) < tol``."""
    _check_nome(q)
    if q == 0.0:
        return 0
    n = math.log(tol * (1.0 - q) / max(scale, 1e-300)) / math.log(q)
    n = max(int(math.ceil(n)), 1)
    if n > _MAX_TERMS:
        raise DomainError(f"q={q} needs {n} terms; outside the supported range")
    return n


def _check_nome(q):
    if not (0.0 <= q < 1.0):
        raise DomainError(f"nome must lie in [0, 1), got {q}")


def _tail(q: float, n: int, scale: float) -> float:
    return scale * q ** (n + 1) / (1.0 - q) if q > 0 else 0.0


def theta(z, q: float, return_bound: bool = False):
    """``(1-z) prod_{n>=1} (1-q^n)(1-z q^n)(1-q^n/z)``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("theta(z; q) needs z != 0")
    scale = float(np.max(np.maximum(np.abs(z), 1.0 / np.abs(z)))) + 1.0
    N = n_terms(q, scale)
    qn = q ** np.arange(1, N + 1, dtype=float)
    zz = z[..., None]
    val = (1 - z) * np.prod((1 - qn) * (1 - zz * qn) * (1 - qn / zz), axis=-1)
    val = val[()] if val.ndim == 0 else val
    if return_bound:
        return val, _tail(q, N, scale) * np.max(np.abs(val))
    return val


def _sum_range(q: float, z) -> int:
    r = float(np.max(np.maximum(np.abs(z), 1.0 / np.abs(z))))
    if q == 0.0:
        return 1
    K = 1
    # term size q^{(K^2-K)/2} r^K, relative to the n=0 term
    while (K * K - K) / 2 * math.log(q) + K * math.log(r) > math.log(TAIL_TOL) - 5:
        K += 1
        if K > _MAX_TERMS:
            raise DomainError("theta sum does not converge for these arguments")
    return K + 1


def theta_sum(z, q: float):
    """Sum form ``sum_n (-z)^n q^{(n^2-n)/2}`` (independent of :func:`theta`)."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("theta(z; q) needs z != 0")
    if q == 0.0:
        return (1 - z)[()]
    K = _sum_range(q, z)
    n = np.arange(-K, K + 1)
    w = q ** ((n * n - n) / 2.0)
    val = np.sum(w * (-z[..., None]) ** n, axis=-1)
    return val[()]


def theta_zderiv(z, q: float):
    """``z d/dz theta(z; q)`` from the sum form."""
    z = np.asarray(z, dtype=complex)
    if q == 0.0:
        return (-z)[()]
    K = _sum_range(q, z)
    n = np.arange(-K, K + 1)
    w = n * q ** ((n * n - n) / 2.0)
    return np.sum(w * (-z[..., None]) ** n, axis=-1)[()]


def euler_phi(q: float, return_bound: bool = False):
    """``prod_{n>=1} (1 - q^n)``."""
    N = n_terms(q)
    val = float(np.prod(1.0 - q ** np.arange(1, N + 1, dtype=float))) if N else 1.0
    if return_bound:
        return val, _tail(q, N, 1.0)
    return val


def _two_sided(z, q):
    """Arguments ``z q^n`` (n >= 0) and ``q^k / z`` (k >= 1) of a symmetric lattice sum."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("z must be nonzero")
    scale = float(np.max(np.maximum(np.abs(z), 1.0 / np.abs(z))))
    N = n_terms(q, scale) + 1
    qn = q ** np.arange(0, N + 1, dtype=float)
    a = z[..., None] * qn
    b = qn[1:] / z[..., None]
    return z, a, b


def _check_poles(a, b, z, q):
    bad = np.isclose(a, 1.0, rtol=0, atol=1e-15) | False
    badb = np.isclose(b, 1.0, rtol=0, atol=1e-15)
    if np.any(bad) or np.any(badb):
        raise PoleError(f"z lies on the lattice q^n (q={q})", where=z)


def F_q(z, q: float):
    """``sum_{n in Z} z q^n / (1 - z q^n)^2``."""
    z, a, b = _two_sided(z, q)
    _check_poles(a, b, z, q)
    # a/(1-a)^2 is invariant under a -> 1/a, which folds n < 0 onto q^k/z
    val = np.sum(a / (1 - a) ** 2, axis=-1) + np.sum(b / (1 - b) ** 2, axis=-1)
    return val[()]


def F_q_zderiv(z, q: float):
    """``z d/dz F_q(z)``."""
    z, a, b = _two_sided(z, q)
    _check_poles(a, b, z, q)
    g = lambda u: u * (1 + u) / (1 - u) ** 3
    return (np.sum(g(a), axis=-1) - np.sum(g(b), axis=-1))[()]


def x_of_z(z, q: float, M: float):
    """``x(z) = -m z d/dz log theta(z; q)`` with ``m = i M``."""
    z, a, b = _two_sided(z, q)
    _check_poles(a, b, z, q)
    val = np.sum(a / (1 - a), axis=-1) - np.sum(b / (1 - b), axis=-1)
    return (1j * M * val)[()]


def canonicalize(z, q: float) -> tuple[complex, int]:
    """Reduce ``z`` into ``q^{1/2} < |z| <= q^{-1/2}``; returns ``(z q^{-k}, k)``.

    ``x(z) = x(z q^{-k}) + k m`` by quasiperiodicity.
    """
    z = complex(z)
    if z == 0:
        raise DomainError("z must be nonzero")
    if not 0.0 < q < 1.0:
        raise DomainError("canonicalization needs 0 < q < 1")
    s = math.log(abs(z)) / math.log(q)  # |z| = q^s
    k = math.floor(s + 0.5)
    if s + 0.5 == k:  # |z| = q^{1/2} boundary belongs to the next sheet
        k -= 1
    return z * q ** (-k), k


def z_of_x(x, q: float, M: float, z0=None, tol: float = 1e-14, maxiter: int = 100) -> complex:
    """Inverse of :func:`x_of_z` on the fundamental cylinder (damped Newton in ``log z``).

    The ``q = 0`` inverse ``z = 1/(1 + m/x)`` seeds the iteration.
    """
    m = 1j * M
    x = complex(x)
    if z0 is None:
        z0 = 1.0 / (1.0 + m / x) if x != 0 else -1.0
    w = np.log(complex(z0))
    half = -0.5 * math.log(q) if q > 0 else math.inf
    for _ in range(maxiter):
        z = np.exp(w)
        r = x_of_z(z, q, M) - x
        # dx/dlogz = m F_q(z)
        d = m * F_q(z, q)
        step = r / d
        lam = 1.0
        while True:
            wn = w - lam * step
            if abs(wn.real) < half and abs(x_of_z(np.exp(wn), q, M) - x) <= abs(r) * (1 - 1e-4 * lam) + tol:
                break
            lam *= 0.5
            if lam < 1e-12:
                raise DomainError(f"z(x) Newton stalled at x={x}")
        w = wn
        if abs(lam * step) < tol:
            break
    z = complex(np.exp(w))
    if q > 0 and not (math.sqrt(q) < abs(z) <= 1 / math.sqrt(q)):
        raise DomainError(f"z(x) left the fundamental cylinder at x={x}")
    return z


def g_q(c, q: float):
    """``2 sum_{r in Z>=0 + 1/2} q^r / (1 - 2 q^r c + q^{2r})``."""
    c = np.asarray(c, dtype=float)
    if q == 0.0:
        return np.zeros_like(c)[()]
    N = n_terms(q, 1.0 / math.sqrt(q))
    qr = q ** (np.arange(N + 1) + 0.5)
    return (2.0 * np.sum(qr / (1.0 - 2.0 * qr * c[..., None] + qr * qr), axis=-1))[()]


def X_theta(theta_, q: float):
    """``X(theta) = sin(theta) g_q(cos theta)``, the bottom cylinder edge in units of ``i m``."""
    t = np.asarray(theta_, dtype=float)
    return (np.sin(t) * g_q(np.cos(t), q))[()]


def _real_or_raise(v, what: str):
    v = np.asarray(v)
    im = np.abs(v.imag)
    if np.any(im > 1e-12 * np.maximum(1.0, np.abs(v.real))):
        raise DomainError(f"{what} has a non-negligible imaginary part ({np.max(im):.3g})")
    return v.real[()]


def X_prime(theta_, q: float):
    """``X'(theta) = F_q(q^{1/2} e^{i theta})``."""
    z = math.sqrt(q) * np.exp(1j * np.asarray(theta_, dtype=float))
    return _real_or_raise(F_q(z, q), "F_q on the cylinder edge")


def X_second(theta_, q: float):
    """``X''(theta) = i z F_q'(z)`` at ``z = q^{1/2} e^{i theta}``."""
    z = math.sqrt(q) * np.exp(1j * np.asarray(theta_, dtype=float))
    return _real_or_raise(1j * F_q_zderiv(z, q), "X''")


def tau_of_q(q: float) -> complex:
    """Purely imaginary ``tau`` with ``q = exp(2 pi i tau)``."""
    if not 0 < q < 1:
        raise DomainError("tau is defined for 0 < q < 1")
    return complex(0.0, -math.log(q) / (2 * math.pi))


def weierstrass_p(u, tau: complex) -> complex:
    """Weierstrass p for the lattice ``Z + tau Z`` (Laurent series ``1/u^2 + O(u^2)``).

    Evaluated through Jacobi theta functions; independent of :func:`F_q`.
    """
    import mpmath as mp

    nome = mp.exp(1j * mp.pi * mp.mpc(tau))
    t2 = mp.jtheta(2, 0, nome)
    t3 = mp.jtheta(3, 0, nome)
    arg = mp.pi * mp.mpc(u)
    th1 = mp.jtheta(1, arg, nome)
    if th1 == 0:
        raise PoleError("u is a lattice point", where=u)
    val = (mp.pi * t2 * t3 * mp.jtheta(4, arg, nome) / th1) ** 2 - mp.pi**2 / 3 * (t2**4 + t3**4)
    return complex(val)


def eisenstein_g2(q: float) -> float:
    """``G2 = (pi^2/3) E2``, ``E2 = 1 - 24 sum n q^n/(1-q^n)``; the Eisenstein-summed ``sum' 1/omega^2``."""
    N = n_terms(q, 24.0 * 1e3)
    n = np.arange(1, N + 1, dtype=float)
    e2 = 1.0 - 24.0 * math.fsum(n * q**n / (1 - q**n)) if N else 1.0
    return math.pi**2 / 3.0 * e2


def weierstrass_p_eisenstein(u, tau: complex) -> complex:
    """Lattice sum ``sum_n sum_m (u + m + n tau)^-2`` (inner sum over m first).

    Equal to ``p(u) + G2(tau)``; this is the normalization under which
    ``X'(theta) = -p_E(tau/2 + theta/2pi) / (4 pi^2)`` holds exactly.
    """
    q = math.exp(-2 * math.pi * complex(tau).imag)
    return weierstrass_p(u, tau) + eisenstein_g2(q)


def eisenstein_e6(q: float) -> float:
    """``1 - 504 sum n^5 q^n / (1 - q^n)``."""
    if q == 0.0:
        return 1.0
    N = n_terms(q, 504.0 * 1e10)
    n = np.arange(1, N + 1, dtype=float)
    return 1.0 - 504.0 * math.fsum(n**5 * q**n / (1 - q**n))


def eisenstein_e6_factor(q: float) -> float:
    """``E6(q)^{-1/4}``; raises :class:`BranchError` when the radicand is not positive."""
    e6 = eisenstein_e6(q)
    if not e6 > 0:
        raise BranchError(f"1 - 504 sum n^5 q^n/(1-q^n) = {e6:.6g} <= 0 at q={q}; no real fourth root")
    return e6**-0.25


def gamma_printed(q: float) -> float:
    """Closed-form q-only edge prefactor ``2^{5/4} 3^{3/4} pi^{-3/2} E6^{-1/4}`` (reported, not trusted)."""
    return 2**1.25 * 3**0.75 * math.pi**-1.5 * eisenstein_e6_factor(q)
