import cmath
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from ells import elliptic as ek
from ells.errors import BranchError, DomainError, PoleError


def pentagonal_phi(q, kmax=60):
    """Euler's pentagonal-number series for prod(1 - q^n)."""
    s = 1.0
    for k in range(1, kmax):
        s += (-1) ** k * (q ** (k * (3 * k - 1) // 2) + q ** (k * (3 * k + 1) // 2))
    return s


def partition_counts(n):
    p = [1] + [0] * n
    for k in range(1, n + 1):
        for j in range(k, n + 1):
            p[j] += p[j - k]
    return p


def off_lattice(z, q, gap=1e-3):
    return all(abs(z * q**k - 1) > gap for k in range(-3, 4))


nomes = st.floats(0.01, 0.7)
radii = st.floats(math.log(0.3), math.log(3.0)).map(math.exp)
angles = st.floats(-math.pi, math.pi)


class TestTheta:
    def test_q_zero(self):
        assert ek.theta(0.3 + 0.2j, 0.0) == pytest.approx(0.7 - 0.2j)

    @pytest.mark.parametrize("q", [0.0, 0.2, 0.7])
    def test_zero_at_one(self, q):
        assert ek.theta(1.0, q) == 0

    def test_triple_product_example(self):
        z = 0.7 * cmath.exp(0.3j)
        a, b = ek.theta(z, 0.5), ek.theta_sum(z, 0.5)
        assert abs(a - b) < 1e-12 * abs(a)

    @given(radii, angles, nomes)
    def test_triple_product(self, r, phi, q):
        z = cmath.rect(r, phi)
        a, b = ek.theta(z, q), ek.theta_sum(z, q)
        assert abs(a - b) <= 1e-12 * max(abs(a), 1e-3)

    @given(radii, angles, nomes)
    def test_quasiperiodic(self, r, phi, q):
        z = cmath.rect(r, phi)
        lhs, rhs = ek.theta(q * z, q), -ek.theta(z, q) / z
        assert abs(lhs - rhs) <= 1e-11 * max(abs(rhs), 1e-3)

    def test_zero_argument(self):
        with pytest.raises(DomainError):
            ek.theta(0.0, 0.3)

    def test_bound_reported(self):
        val, bound = ek.theta(0.5j, 0.4, return_bound=True)
        assert 0 <= bound < 1e-15

    def test_log_derivative_matches_finite_difference(self):
        z, q, h = 0.8 * cmath.exp(0.4j), 0.3, 1e-6
        fd = z * (ek.theta(z * (1 + h), q) - ek.theta(z * (1 - h), q)) / (2 * h * z)
        assert ek.theta_zderiv(z, q) == pytest.approx(fd, rel=1e-8)


class TestPhi:
    def test_values(self):
        assert ek.euler_phi(0.0) == 1.0
        assert ek.euler_phi(0.1) == pytest.approx(0.8900100999989990, abs=1e-15)

    @pytest.mark.parametrize("q", [0.1, 0.3, 0.6])
    def test_pentagonal(self, q):
        assert ek.euler_phi(q) == pytest.approx(pentagonal_phi(q), rel=1e-13)

    def test_partition_generating_function(self):
        q = 0.3
        p = partition_counts(120)
        assert 1 / ek.euler_phi(q) == pytest.approx(math.fsum(pn * q**n for n, pn in enumerate(p)), rel=1e-13)
        # first 20 coefficients through the truncated power series of 1/phi
        inv = np.zeros(21)
        inv[0] = 1.0
        phi = np.zeros(21)
        phi[0] = 1.0
        for k in range(1, 21):
            phi[1:] = phi[1:] - np.concatenate(([0.0] * (k - 1), phi[: 21 - k]))[: 20]
        for n in range(1, 21):
            inv[n] = -np.dot(phi[1 : n + 1], inv[n - 1 :: -1][:n])
        assert list(inv.astype(int)) == p[:21]


class TestF:
    def test_q_zero(self):
        assert ek.F_q(0.5, 0.0) == pytest.approx(2.0)

    @settings(max_examples=50)
    @given(radii, angles, nomes)
    def test_shift_invariance(self, r, phi, q):
        z = cmath.rect(r, phi)
        assume(off_lattice(z, q))
        a, b = ek.F_q(q * z, q), ek.F_q(z, q)
        assert abs(a - b) <= 1e-10 * max(1.0, abs(b))

    @given(angles, st.floats(0.01, 0.8))
    def test_real_on_edge(self, phi, q):
        v = ek.F_q(math.sqrt(q) * cmath.exp(1j * phi), q)
        assert abs(v.imag) < 1e-12 * max(1.0, abs(v))

    def test_lattice_pole(self):
        with pytest.raises(PoleError):
            ek.F_q(0.09, 0.3)
        with pytest.raises(PoleError):
            ek.F_q(1.0, 0.3)


class TestX:
    def test_q_zero(self):
        assert ek.x_of_z(0.5, 0.0, 1.0) == pytest.approx(1j)

    @settings(max_examples=100)
    @given(radii, angles, st.floats(0.05, 0.6), st.floats(0.2, 3.0))
    def test_quasiperiodic(self, r, phi, q, M):
        z = cmath.rect(r, phi)
        assume(off_lattice(z, q))
        dx = ek.x_of_z(q * z, q, M) - ek.x_of_z(z, q, M)
        assert abs(dx - 1j * M) < 1e-12 * M * max(1.0, abs(ek.x_of_z(z, q, M)))

    def test_simple_pole_at_one(self):
        vals = [abs(ek.x_of_z(1 - e, 0.2, 1.0)) for e in (1e-2, 1e-4, 1e-6)]
        assert vals[1] / vals[0] == pytest.approx(100, rel=0.05)
        assert vals[2] / vals[1] == pytest.approx(100, rel=0.01)
        with pytest.raises(PoleError):
            ek.x_of_z(1.0, 0.2, 1.0)

    def test_inverse(self):
        q, M = 0.2, 0.9
        for x in (0.3 + 0.5j, -1.2 - 0.4j, 2.0 + 0.1j):
            z = ek.z_of_x(x, q, M)
            assert ek.x_of_z(z, q, M) == pytest.approx(x, abs=1e-12)
            assert math.sqrt(q) < abs(z) <= 1 / math.sqrt(q)

    def test_canonicalize(self):
        q = 0.25
        z = 0.01 * cmath.exp(0.7j)
        zc, k = ek.canonicalize(z, q)
        assert math.sqrt(q) < abs(zc) <= 1 / math.sqrt(q)
        assert ek.x_of_z(z, q, 1.0) == pytest.approx(ek.x_of_z(zc, q, 1.0) + k * 1j, abs=1e-12)

    def test_edge_matches_x_of_z(self):
        q, M = 0.3, 0.8
        th = np.linspace(-3.1, 3.1, 50)
        z = math.sqrt(q) * np.exp(1j * th)
        other = -1j * ek.x_of_z(z, q, M) / (1j * M)
        assert np.allclose(ek.X_theta(th, q), other, rtol=0, atol=1e-12)

    def test_odd_with_zeros(self):
        q = 0.4
        th = np.linspace(0.01, 3.1, 40)
        assert np.allclose(ek.X_theta(-th, q), -ek.X_theta(th, q), atol=1e-15)
        assert ek.X_theta(0.0, q) == 0.0
        assert abs(ek.X_theta(math.pi, q)) < 1e-12

    def test_small_q(self):
        q = 1e-8
        th = np.linspace(0, math.pi, 9)
        assert np.allclose(ek.X_theta(th, q) / math.sqrt(q), 2 * np.sin(th), atol=1e-3)


class TestDerivatives:
    @pytest.mark.parametrize("q", [0.05, 0.2, 0.5])
    def test_finite_difference(self, q):
        h = 1e-6
        for th in np.linspace(0.2, 2.9, 7):
            fd = (ek.X_theta(th + h, q) - ek.X_theta(th - h, q)) / (2 * h)
            assert abs(fd - ek.X_prime(th, q)) < 1e-6

    def test_second_derivative(self):
        q, h = 0.2, 1e-5
        for th in (0.3, 1.0, 2.5):
            fd = (ek.X_prime(th + h, q) - ek.X_prime(th - h, q)) / (2 * h)
            assert ek.X_second(th, q) == pytest.approx(fd, rel=1e-7)

    def test_weierstrass_relation(self):
        # X' matches -p/(4 pi^2) once p carries the Eisenstein-summed constant G2
        q, th = 0.2, 1.0
        tau = ek.tau_of_q(q)
        u = tau / 2 + th / (2 * math.pi)
        pE = ek.weierstrass_p_eisenstein(u, tau)
        assert abs(ek.X_prime(th, q) + pE / (4 * math.pi**2)) < 1e-9
        assert pE - ek.weierstrass_p(u, tau) == pytest.approx(ek.eisenstein_g2(q), abs=1e-12)

    def test_weierstrass_laurent(self):
        tau = ek.tau_of_q(0.3)
        u = 1e-3 + 0j
        assert ek.weierstrass_p(u, tau) == pytest.approx(1 / u**2, rel=1e-5)

    def test_three_way_agreement(self):
        q, h = 0.35, 1e-6
        tau = ek.tau_of_q(q)
        for th in np.linspace(0.1, 3.0, 9):
            fd = (ek.X_theta(th + h, q) - ek.X_theta(th - h, q)) / (2 * h)
            fq = ek.X_prime(th, q)
            wp = -ek.weierstrass_p_eisenstein(tau / 2 + th / (2 * math.pi), tau) / (4 * math.pi**2)
            vals = [fd, fq, wp.real]
            assert abs(wp.imag) < 1e-10
            assert max(abs(a - b) for a in vals for b in vals) < 1e-8

    @pytest.mark.parametrize("q", [0.001, 0.1, 0.5, 0.89])
    def test_endpoint_signs(self, q):
        assert ek.X_prime(0.0, q) > 0
        assert ek.X_prime(math.pi, q) < 0


class TestEisenstein:
    def test_zero(self):
        assert ek.eisenstein_e6_factor(0.0) == 1.0

    def test_small_q(self):
        assert ek.eisenstein_e6_factor(1e-4) == pytest.approx(1.0130, abs=1e-4)

    def test_branch_error(self):
        assert ek.eisenstein_e6(0.01) < 0
        with pytest.raises(BranchError):
            ek.eisenstein_e6_factor(0.01)

    def test_g2_small_q(self):
        assert ek.eisenstein_g2(1e-3) == pytest.approx(math.pi**2 / 3 * (1 - 24 * (1e-3 + 3e-6 + 4e-9 + 7e-12)), rel=1e-12)

    def test_gamma_printed(self):
        assert ek.gamma_printed(0.0) == pytest.approx(2**1.25 * 3**0.75 * math.pi**-1.5)


def test_nome_validation():
    with pytest.raises(DomainError):
        ek.euler_phi(1.0)
    with pytest.raises(DomainError):
        ek.tau_of_q(0.0)
