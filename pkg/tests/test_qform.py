import math

import numpy as np
import pytest

from specproc import measure as M
from specproc import qform as Q
from specproc import testfn as T

SQRT_2PI = math.sqrt(2 * math.pi)

# oracle: q(exp(-x^2/2), Lebesgue) = int 2 pi exp(-u^2) du = 2 pi sqrt(pi)
Q_GAUSS_LEBESGUE = 2 * math.pi * math.sqrt(math.pi)
# oracle: q(exp(-x^2/2), comb) = 2 pi sum_n exp(-n^2); terms below 1e-16
# beyond |n| = 6
Q_GAUSS_COMB = 2 * math.pi * sum(math.exp(-n * n) for n in range(-8, 9))


def random_testfn(rng):
    kind = rng.integers(0, 3)
    if kind == 0:
        return T.TestFunction.gaussian_packet(center=rng.uniform(-2, 2),
                                              width=rng.uniform(0.5, 2.0))
    if kind == 1:
        coeffs = rng.normal(size=rng.integers(1, 5))
        return T.TestFunction.hermite(list(coeffs))
    return (T.TestFunction.gaussian_packet(width=rng.uniform(0.5, 1.5))
            + rng.normal() * T.TestFunction.hermite([0.0, 1.0]))


class TestQuadraticForm:
    def test_gaussian_lebesgue(self):
        fv = Q.quadratic_form(T.TestFunction.gaussian_packet(), M.lebesgue())
        assert abs(fv.real - Q_GAUSS_LEBESGUE) <= 1e-8 * Q_GAUSS_LEBESGUE
        assert fv.error_bound <= 1e-8 * fv.real

    def test_gaussian_comb(self):
        fv = Q.quadratic_form(T.TestFunction.gaussian_packet(), M.dirac_comb())
        assert abs(fv.real - Q_GAUSS_COMB) <= 1e-10 * Q_GAUSS_COMB

    def test_zero_function(self):
        fv = Q.quadratic_form(T.TestFunction.zero(), M.dirac_comb())
        assert fv.real == 0.0

    def test_positivity(self):
        rng = np.random.default_rng(7)
        for sigma in (M.lebesgue(), M.dirac_comb(), M.cantor_measure()):
            for _ in range(5):
                assert Q.quadratic_form(random_testfn(rng), sigma).real >= 0

    def test_homogeneity(self):
        rng = np.random.default_rng(8)
        psi = random_testfn(rng)
        sigma = M.dirac_comb()
        q1 = Q.quadratic_form(psi, sigma).real
        for c in (2.0, -0.5, 3j):
            qc = Q.quadratic_form(c * psi, sigma).real
            assert abs(qc - abs(c) ** 2 * q1) <= 1e-10 * abs(c) ** 2 * q1

    def test_parallelogram_law(self):
        rng = np.random.default_rng(9)
        for sigma in (M.lebesgue(), M.dirac_comb()):
            for _ in range(6):
                phi, psi = random_testfn(rng), random_testfn(rng)
                q = lambda f: Q.quadratic_form(f, sigma).real
                lhs = 0.5 * (q(phi + psi) + q(phi - psi))
                rhs = q(phi) + q(psi)
                assert abs(lhs - rhs) <= 1e-8 * max(rhs, 1e-12)


class TestHermitianForm:
    def test_diagonal_matches_quadratic(self):
        g = T.TestFunction.gaussian_packet()
        sigma = M.lebesgue()
        l = Q.hermitian_form(g, g, sigma)
        q = Q.quadratic_form(g, sigma)
        assert abs(l.value - q.real) <= 1e-10 * q.real
        assert abs(l.value.imag) <= 1e-10 * q.real

    def test_hermitian_symmetry(self):
        rng = np.random.default_rng(10)
        sigma = M.dirac_comb()
        for _ in range(5):
            a, b = random_testfn(rng), random_testfn(rng)
            lab = Q.hermitian_form(a, b, sigma).value
            lba = Q.hermitian_form(b, a, sigma).value
            assert abs(lab - np.conj(lba)) <= 1e-9 * max(abs(lab), 1e-12)

    def test_hermite_orthogonality(self):
        # distinct Hermite functions are orthogonal under the transform
        # pairing against Lebesgue measure (numeric oracle: 2 pi delta_mk)
        h0 = T.TestFunction.hermite([1.0])
        h1 = T.TestFunction.hermite([0.0, 1.0])
        val = Q.hermitian_form(h0, h1, M.lebesgue()).value
        assert abs(val) <= 1e-10

    def test_cauchy_schwarz_random_pairs(self):
        rng = np.random.default_rng(11)
        measures = [M.lebesgue(), M.dirac_comb(), M.cantor_measure(),
                    M.fbm_spectral_density(0.7)]
        for i in range(50):
            sigma = measures[i % len(measures)]
            a, b = random_testfn(rng), random_testfn(rng)
            lab = abs(Q.hermitian_form(a, b, sigma).value)
            qa = Q.quadratic_form(a, sigma).real
            qb = Q.quadratic_form(b, sigma).real
            assert lab ** 2 <= qa * qb * (1 + 1e-8) + 1e-12

    def test_translate_saturates_at_zero_shift(self):
        psi = T.TestFunction.gaussian_packet()
        sigma = M.dirac_comb()
        q = Q.quadratic_form(psi, sigma).real
        for t in (0.0, 0.4, 2.0):
            val = abs(Q.hermitian_form(psi, psi.translated(t), sigma).value)
            assert val <= q * (1 + 1e-9)
        t0 = abs(Q.hermitian_form(psi, psi.translated(0.0), sigma).value)
        assert abs(t0 - q) <= 1e-10 * q


class TestFrechetBound:
    def test_gaussian_comb(self):
        psi = T.TestFunction.gaussian_packet()
        sigma = M.dirac_comb()
        bound, holds = Q.frechet_bound(psi, sigma, p=1)
        q = Q.quadratic_form(psi, sigma).real
        assert holds and bound >= q
        # the weighted-sup factor for this transform peaks at u=0 with 2 pi
        c = M.moment_integral(sigma, 1)
        assert abs(bound - c * 2 * math.pi) <= 1e-6 * bound

    def test_zero(self):
        assert Q.frechet_bound(T.TestFunction.zero(), M.dirac_comb()) == (0.0, True)

    def test_scaling(self):
        psi = T.TestFunction.gaussian_packet(width=0.8)
        sigma = M.lebesgue()
        b1, h1 = Q.frechet_bound(psi, sigma, p=1)
        b2, h2 = Q.frechet_bound(3.0 * psi, sigma, p=1)
        assert h1 and h2
        assert abs(b2 - 9.0 * b1) <= 1e-9 * b2

    def test_random_inputs_hold(self):
        rng = np.random.default_rng(12)
        for sigma in (M.dirac_comb(), M.fbm_spectral_density(0.3)):
            for _ in range(5):
                _, holds = Q.frechet_bound(random_testfn(rng), sigma)
                assert holds


class TestClosabilityWitness:
    def test_comb_form_values(self):
        # lattice-sum oracle: q(s_k) = sum_n exp(-2 k n^2)
        rep = Q.closability_witness(M.dirac_comb(), [1, 10, 100, 1000])
        for pt in rep.points:
            oracle = sum(math.exp(-2 * pt.k * n * n) for n in range(-12, 13))
            assert abs(pt.q_value - oracle) <= 1e-10 * oracle
        assert rep.q_values[-1] == pytest.approx(1.0, abs=1e-12)

    def test_l2_norms_closed_form(self):
        # ||s_k||^2 = (1/2pi) sqrt(pi/(2k))
        rep = Q.closability_witness(M.dirac_comb(), [1, 10, 100])
        for pt in rep.points:
            oracle = math.sqrt(math.pi / (2 * pt.k)) / (2 * math.pi)
            assert abs(pt.l2_norm_sq - oracle) <= 1e-8 * oracle
        norms = rep.l2_norms
        assert all(a > b for a, b in zip(norms, norms[1:]))

    def test_lebesgue_decays(self):
        rep = Q.closability_witness(M.lebesgue(), [1, 10, 100, 1000, 10000])
        for pt in rep.points:
            oracle = math.sqrt(math.pi / (2 * pt.k))
            assert abs(pt.q_value - oracle) <= 1e-8 * oracle
        qs = rep.q_values
        assert all(a > b for a, b in zip(qs, qs[1:]))

    def test_dirac_stays_up(self):
        rep = Q.closability_witness(M.dirac(), [1, 10, 100, 1000])
        assert all(q > 0.9 for q in rep.q_values)

    def test_cauchy_gaps_cancel_center_atom(self):
        rep = Q.closability_witness(M.dirac_comb(), [1000, 10000])
        (_, _, gap), = rep.cauchy_gaps
        assert gap < 1e-6

    def test_off_center_probe(self):
        # probing at a lattice atom away from the origin triggers the same
        # failure signature
        rep = Q.closability_witness(M.dirac_comb(), [10, 1000], center=3.0)
        assert all(q > 0.9 for q in rep.q_values)
        rep2 = Q.closability_witness(M.dirac_comb(), [10, 1000], center=0.5)
        assert rep2.q_values[-1] < 1e-3


class TestTranslationInvariance:
    def test_zero_shift(self):
        psi = T.TestFunction.gaussian_packet()
        _, _, gap = Q.translation_invariance_check(psi, M.dirac_comb(), 0.0)
        assert gap == 0.0

    def test_comb_shift(self):
        psi = T.TestFunction.gaussian_packet()
        q0, qt, gap = Q.translation_invariance_check(psi, M.dirac_comb(), 0.37)
        assert gap <= 1e-8

    def test_lebesgue_hermite(self):
        psi = T.TestFunction.hermite([0.0, 1.0])
        _, _, gap = Q.translation_invariance_check(psi, M.lebesgue(), 2.0)
        assert gap <= 1e-8
