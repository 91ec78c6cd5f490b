import math

import numpy as np
import pytest
from scipy import integrate as sciint

from specproc import testfn as T
from specproc.decay import CompactSupport, GaussianDecay
from specproc.errors import ConfigError, UnreachableTolerance, Unsupported

SQRT_2PI = math.sqrt(2 * math.pi)


def quad_complex(f, a, b, **kw):
    re, _ = sciint.quad(lambda x: np.real(f(x)), a, b, **kw)
    im, _ = sciint.quad(lambda x: np.imag(f(x)), a, b, **kw)
    return re + 1j * im


class TestFourierTransforms:
    def test_gaussian_closed_form(self):
        # oracle: int exp(-iux) exp(-x^2/2) dx = sqrt(2 pi) exp(-u^2/2)
        g = T.TestFunction.gaussian_packet()
        u = np.linspace(-4, 4, 17)
        assert np.allclose(g.fourier(u), SQRT_2PI * np.exp(-u ** 2 / 2),
                           rtol=1e-14)

    def test_gaussian_against_quadrature(self):
        g = T.TestFunction.gaussian_packet(center=0.7, width=1.3,
                                           modulation=2.0)
        for u in (0.0, 0.5, 2.0, -3.1):
            direct = quad_complex(
                lambda x: np.exp(-1j * u * x)
                * complex(g.value(np.asarray([x]))[0]),
                -20, 20, limit=200)
            assert abs(complex(g.fourier(np.asarray([u]))[0]) - direct) < 1e-10

    def test_hermite_eigenfunction(self):
        # h_m maps to sqrt(2 pi) (-i)^m h_m; verify numerically at 10 points
        for m in (0, 1, 4):
            h = T.TestFunction([(1.0, T.HermiteFunction(m))])
            u = np.linspace(-3, 3, 10)
            expected = SQRT_2PI * (-1j) ** m * T.hermite_values(m, u)
            assert np.allclose(h.fourier(u), expected, rtol=1e-12)

    def test_hermite_against_quadrature(self):
        h = T.TestFunction([(1.0, T.HermiteFunction(3))])
        for u in (0.3, 1.7):
            direct = quad_complex(
                lambda x: np.exp(-1j * u * x)
                * complex(h.value(np.asarray([x]))[0]),
                -25, 25, limit=300)
            assert abs(complex(h.fourier(np.asarray([u]))[0]) - direct) < 1e-9

    def test_translation_modulation_symmetry(self):
        psi = T.TestFunction.gaussian_packet(width=0.8)
        a = 1.3
        shifted = T.translate(psi, a)
        u = np.linspace(-5, 5, 11)
        assert np.allclose(shifted.fourier(u),
                           np.exp(-1j * u * a) * psi.fourier(u), rtol=1e-13)

    def test_parseval(self):
        # int |hat|^2 du = 2 pi int |psi|^2 dx for every representable psi
        fns = [T.TestFunction.gaussian_packet(),
               T.TestFunction.gaussian_packet(center=-1.2, width=0.5,
                                              modulation=3.0),
               T.TestFunction.hermite([0.3, 0.0, 1.0]),
               T.TestFunction.gaussian_packet(width=2.0)
               + 0.5 * T.TestFunction.hermite([1.0])]
        for psi in fns:
            freq, _ = sciint.quad(
                lambda u: abs(complex(psi.fourier(np.asarray([u]))[0])) ** 2,
                -np.inf, np.inf, limit=400)
            time, _ = sciint.quad(
                lambda x: abs(complex(psi.value(np.asarray([x]))[0])) ** 2,
                -np.inf, np.inf, limit=400)
            assert abs(freq - 2 * math.pi * time) <= 1e-8 * freq


class TestTranslate:
    def test_identity(self):
        psi = T.TestFunction.hermite([1.0, 2.0])
        out = T.translate(psi, 0.0)
        u = np.linspace(-2, 2, 9)
        assert np.allclose(out.fourier(u), psi.fourier(u))

    def test_packet_center_shift(self):
        psi = T.TestFunction.gaussian_packet(center=0.5)
        out = T.translate(psi, 2.0)
        atom = out.terms[0][1]
        assert atom.center == 2.5

    def test_modulus_unchanged(self):
        psi = T.TestFunction.gaussian_packet(modulation=1.5)
        u = np.linspace(-6, 6, 25)
        for t in (0.1, 2.0, -7.7):
            out = T.translate(psi, t)
            assert np.allclose(np.abs(out.fourier(u)), np.abs(psi.fourier(u)),
                               rtol=1e-13)


class TestPeriodize:
    def test_gaussian_at_origin(self):
        # direct summation oracle: 1 + 2 exp(-2 pi^2) + ...
        oracle = sum(math.exp(-(2 * math.pi * n) ** 2 / 2)
                     for n in range(-4, 5))
        psi = T.TestFunction.gaussian_packet()
        for n in (3, 5, 8):
            assert abs(T.periodize(psi, 0.0, n) - oracle) < 1e-15

    def test_linearity_exact(self):
        a = T.TestFunction.gaussian_packet(width=0.7)
        b = T.TestFunction.hermite([0.0, 1.0])
        combo = 2.0 * a + 0.5 * b
        x, n = 0.31, 6
        lhs = T.periodize(combo, x, n)
        rhs = 2.0 * T.periodize(a, x, n) + 0.5 * T.periodize(b, x, n)
        assert lhs == pytest.approx(rhs, abs=1e-15)

    def test_tail_bound_honest(self):
        psi = T.TestFunction.gaussian_packet(width=1.1, center=0.4)
        v3, b3 = T.periodize_with_bound(psi, 0.2, 3)
        v9, _ = T.periodize_with_bound(psi, 0.2, 9)
        assert abs(v9 - v3) <= b3

    def test_pairing_against_transform_sum(self):
        # int (periodize psi) conj(phi) dx = sum hat(psi)(n) conj(hat(phi)(n)) / (2 pi)
        psi = T.TestFunction.gaussian_packet(width=0.9, center=0.3)
        phi = T.TestFunction.gaussian_packet(width=1.4, center=-0.6)
        lhs, _ = sciint.quad(
            lambda x: T.periodize(psi, x, 8)
            * complex(phi.value(np.asarray([x]))[0]).real,
            -20, 20, limit=400)
        n = np.arange(-40, 41)
        rhs = np.sum(psi.fourier(n) * np.conj(phi.fourier(n))).real
        assert abs(lhs - rhs / (2 * math.pi)) <= 1e-8 * abs(lhs)

    def test_missing_decay_certificate(self):
        win = T.TestFunction.fourier_side("1", (-1, 1))
        with pytest.raises((UnreachableTolerance, Unsupported)):
            T.periodize(win, 0.0, 3)


class TestIncrementKernel:
    def test_value_at_zero(self):
        xi = T.IncrementKernel(2.5)
        assert complex(xi.fourier(np.asarray([0.0]))[0]) == 2.5j

    def test_series_branch_continuity(self):
        # relative error < 1e-12 against the limit i*t for |u| < 1e-6
        for t in (0.5, 3.0, -1.7):
            xi = T.IncrementKernel(t)
            u = np.array([-1e-6, -1e-9, 1e-12, 1e-9, 1e-6])
            vals = xi.fourier(u)
            limit = 1j * t
            assert np.all(np.abs(vals - limit) <= 1e-6 * 3 * abs(t))
            exact = (np.exp(1j * t * 1e-2) - 1) / 1e-2
            assert abs(complex(xi.fourier(np.asarray([1e-2]))[0]) - exact) \
                <= 1e-12 * abs(exact)

    def test_squared_modulus_identity(self):
        t = 1.3
        xi = T.IncrementKernel(t)
        u = np.array([0.0, 0.4, 2.0, -7.0])
        expected = np.where(u == 0, t * t,
                            2 * (1 - np.cos(t * np.where(u == 0, 1, u)))
                            / np.where(u == 0, 1, u) ** 2)
        assert np.allclose(xi.squared_modulus(u), expected, rtol=1e-12)

    def test_branch_crossover_consistency(self):
        t = 1.0
        xi = T.IncrementKernel(t)
        u = np.array([0.9e-4, 1.1e-4])  # straddles the series cut
        exact = (np.exp(1j * t * u) - 1) / u
        assert np.allclose(xi.fourier(u), exact, rtol=1e-13)


class TestHermiteValues:
    def test_orthonormal(self):
        x = np.linspace(-15, 15, 200001)
        for m, k in ((0, 0), (3, 3), (3, 5), (1, 2), (6, 6)):
            hm = T.hermite_values(m, x)
            hk = T.hermite_values(k, x)
            ip = np.trapezoid(hm * hk, x)
            assert abs(ip - (1.0 if m == k else 0.0)) < 1e-8

    def test_envelope_certificate(self):
        for m in (0, 2, 7):
            atom = T.HermiteFunction(m)
            env = atom.time_envelope()
            x = np.linspace(-12, 12, 2001)
            assert np.all(np.abs(atom.value(x)) <= env(x) + 1e-12)


class TestStructure:
    def test_real_tags(self):
        assert T.TestFunction.gaussian_packet().real
        assert not T.TestFunction.gaussian_packet(modulation=1.0).real
        cosmod = T.TestFunction([(0.5, T.GaussianPacket(0, 1, 2.0)),
                                 (0.5, T.GaussianPacket(0, 1, -2.0))])
        assert cosmod.real
        assert T.TestFunction.hermite([1.0, -2.0]).real

    def test_zero_function(self):
        z = T.TestFunction.zero()
        assert z.is_zero()
        assert z.l2_norm_squared() == 0.0

    def test_l2_norm(self):
        g = T.TestFunction.gaussian_packet()
        assert abs(g.l2_norm_squared() - math.sqrt(math.pi)) < 1e-10

    def test_algebra_collects_terms(self):
        g = T.TestFunction.gaussian_packet()
        diff = g - g
        assert diff.is_zero()

    def test_config_roundtrip(self):
        fns = [T.TestFunction.gaussian_packet(center=1.0, width=0.5),
               T.TestFunction.hermite([1.0, 0.0, 2.0]),
               T.TestFunction.fourier_side("1", (0, 1))]
        u = np.linspace(-3, 3, 7)
        for psi in fns:
            back = T.load_testfn(psi.to_config())
            assert np.allclose(back.fourier(u), psi.fourier(u))

    def test_bad_config(self):
        with pytest.raises(ConfigError):
            T.load_testfn({"form": "mystery"})
        with pytest.raises(ConfigError):
            T.TestFunction.gaussian_packet(width=-1.0)

    def test_decay_certificates(self):
        g = T.TestFunction.gaussian_packet()
        assert isinstance(g.fourier_decay(), GaussianDecay)
        w = T.TestFunction.fourier_side("1", (0, 1))
        assert isinstance(w.fourier_decay(), CompactSupport)
        u = np.linspace(-30, 30, 601)
        for psi in (g, T.TestFunction.hermite([0.0, 1.0, 0.5]),
                    T.TestFunction.gaussian_packet(modulation=2.0, width=0.7)):
            dec = psi.fourier_decay()
            vals = np.abs(psi.fourier(u))
            for ui, vi in zip(u, vals):
                if abs(ui) >= getattr(dec, "cutoff", 0.0):
                    assert vi <= dec.envelope(ui) * (1 + 1e-9) + 1e-300
