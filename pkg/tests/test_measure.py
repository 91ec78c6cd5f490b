import math

import numpy as np
import pytest

from specproc import measure as M
from specproc.decay import GaussianDecay
from specproc.errors import ConfigError, NotAMeasure, UnreachableTolerance, Unsupported

# closed-form oracle: sum_n 1/(1+n^2) = pi*coth(pi)
PI_COTH_PI = math.pi / math.tanh(math.pi)


def partial_comb_moment(n_terms):
    """Independent oracle: direct partial sum with an integral tail bound."""
    n = np.arange(1, n_terms + 1)
    s = 1.0 + 2.0 * np.sum(1.0 / (1.0 + n ** 2))
    tail_bound = 2.0 / n_terms
    return s, tail_bound


class TestMomentIntegral:
    def test_comb_closed_form(self):
        v = M.moment_integral(M.dirac_comb(), 1)
        assert abs(v - PI_COTH_PI) <= 1e-10 * PI_COTH_PI

    def test_comb_partial_sum_crosscheck(self):
        v = M.moment_integral(M.dirac_comb(), 1)
        s, bound = partial_comb_moment(200000)
        assert abs(v - s) <= bound

    def test_single_atom(self):
        for p in (0, 1, 5):
            assert M.moment_integral(M.dirac(), p) == 1.0

    def test_lebesgue_arctan_oracle(self):
        # int du/(1+u^2) = 2*arctan(inf) = pi
        v = M.moment_integral(M.lebesgue(), 1)
        assert abs(v - math.pi) <= 1e-10 * math.pi

    def test_monotone_in_p(self):
        for sigma in (M.dirac_comb(), M.lebesgue((0, 3)), M.cantor_measure(),
                      M.fbm_spectral_density(0.7)):
            vals = [M.moment_integral(sigma, p) for p in (1, 2, 3)]
            assert vals[0] >= vals[1] >= vals[2] > 0

    def test_mixture_linearity(self):
        comb, cantor = M.dirac_comb(), M.cantor_measure()
        mix = M.MixtureMeasure([(0.7, comb), (2.5, cantor)])
        lhs = M.moment_integral(mix, 1)
        rhs = 0.7 * M.moment_integral(comb, 1) + 2.5 * M.moment_integral(cantor, 1)
        assert abs(lhs - rhs) <= 1e-9 * abs(rhs)

    def test_divergent_cases(self):
        assert M.moment_integral(M.dirac_comb(), 0) == math.inf
        assert M.moment_integral(M.lebesgue(), 0) == math.inf
        assert M.moment_integral(M.DensityMeasure(expr="exp(u**2)"), 4) == math.inf

    def test_shifted_measure(self):
        base = M.dirac(0.0, 2.0)
        sh = M.ShiftedMeasure(base, 3.0)
        assert abs(M.moment_integral(sh, 1) - 2.0 / 10.0) < 1e-12

    def test_ifs_mass_and_barycenter(self):
        c = M.cantor_measure()
        assert abs(M.moment_integral(c, 0) - 1.0) < 1e-10
        part = c.pieces().ifs[0]
        assert abs(part.barycenter - 0.5) < 1e-14


class TestCertify:
    def test_cantor_compact(self):
        cert = M.certify_tempered(M.cantor_measure())
        assert cert.in_class and cert.p == 0

    def test_lebesgue(self):
        cert = M.certify_tempered(M.lebesgue())
        assert cert.in_class and cert.p == 1

    def test_super_polynomial(self):
        cert = M.certify_tempered(M.DensityMeasure(expr="exp(u**2)"))
        assert not cert.in_class

    def test_comb(self):
        cert = M.certify_tempered(M.dirac_comb())
        assert cert.in_class and cert.p == 1 and cert.certificate == "analytic"

    def test_quadratic_lattice_weights(self):
        lat = M.LatticeMeasure(weight="n**2")
        cert = M.certify_tempered(lat)
        assert cert.in_class and cert.p == 2

    def test_fbm(self):
        for h in (0.3, 0.7):
            cert = M.certify_tempered(M.fbm_spectral_density(h))
            assert cert.in_class and cert.p == 1


class TestShiftBounded:
    def test_finite_atoms(self):
        m = M.FiniteAtomicMeasure([(-2.0, 1.0), (3.0, 0.5)])
        assert M.certify_shift_bounded(m).bounded

    def test_dirac(self):
        assert M.certify_shift_bounded(M.dirac()).bounded

    def test_lebesgue_no_certificate(self):
        cert = M.certify_shift_bounded(M.lebesgue())
        assert not cert.bounded and "no certificate" in cert.reason

    def test_comb_no_certificate(self):
        assert not M.certify_shift_bounded(M.dirac_comb()).bounded

    def test_peetre_inequality_oracle(self):
        # (1+|u+v|^2) >= (1+v^2) / (2 (1+u^2)), the bound behind the
        # compact-support certificate
        rng = np.random.default_rng(42)
        u = rng.uniform(-50, 50, 2000)
        v = rng.uniform(-50, 50, 2000)
        lhs = 1 + (u + v) ** 2
        rhs = (1 + v ** 2) / (2 * (1 + u ** 2))
        assert np.all(lhs >= rhs)


class TestConvolve:
    def test_point_masses(self):
        out = M.convolve(M.dirac(1.5), M.dirac(-0.5))
        assert out.to_config() == {"kind": "atomic", "atoms": [[1.0, 1.0]]}

    def test_two_point_bruteforce(self):
        two = M.FiniteAtomicMeasure([(0, 1), (1, 1)])
        out = M.convolve(two, two)
        # brute force over all atom pairs
        expected = {}
        for a, wa in two.atoms:
            for b, wb in two.atoms:
                expected[a + b] = expected.get(a + b, 0.0) + wa * wb
        assert dict(out.atoms) == expected

    def test_lebesgue_lebesgue_raises(self):
        with pytest.raises(NotAMeasure):
            M.convolve(M.lebesgue(), M.lebesgue())

    def test_symmetry_mixed_kinds(self):
        atoms = M.FiniteAtomicMeasure([(0.5, 1.0), (-1.0, 2.0)])
        dens = M.DensityMeasure(expr="exp(-u**2)")
        f = lambda u: np.asarray(u) ** 2 * np.exp(-np.asarray(u) ** 2)
        dec = GaussianDecay(1.0, 1.0, 0.0)
        a = M.convolve(atoms, dens).integrate(f, decay=dec, rtol=1e-10)
        b = M.convolve(dens, atoms).integrate(f, decay=dec, rtol=1e-10)
        assert abs(a.value - b.value) <= 1e-9 * abs(a.value)

    def test_class_law_instance(self):
        # convolution with a shift-bounded finite atomic measure stays in class
        partner = M.FiniteAtomicMeasure([(0.25, 2.0), (-1.0, 1.0)])
        assert M.certify_shift_bounded(partner).bounded
        for sigma in (M.lebesgue(), M.dirac_comb(), M.fbm_spectral_density(0.7)):
            out = M.convolve(sigma, partner)
            cert = M.certify_tempered(out)
            assert cert.in_class

    def test_density_density_lazy_kernel(self):
        u01 = M.lebesgue((0, 1))
        tri = M.convolve(u01, u01)
        assert tri.support == (0.0, 2.0)
        assert abs(M.moment_integral(tri, 0) - 1.0) < 1e-9
        assert abs(float(tri.fn(np.array([1.0]))[0]) - 1.0) < 1e-10

    def test_unsupported_pair(self):
        with pytest.raises(Unsupported):
            M.convolve(M.dirac_comb(), M.lebesgue())


class TestDecompose:
    def test_atom_vs_density(self):
        dec = M.lebesgue_decompose(M.dirac(), M.lebesgue((0, 1)))
        assert dec.ac_part.is_null()
        assert dict(dec.singular_part.atoms) == {0.0: 1.0}

    def test_atom_matching(self):
        a1 = M.FiniteAtomicMeasure([(0, 1), (1, 1)])
        a2 = M.FiniteAtomicMeasure([(1, 4)])
        dec = M.lebesgue_decompose(a1, a2)
        assert dict(dec.ac_part.atoms) == {1.0: 1.0}
        assert dict(dec.singular_part.atoms) == {0.0: 1.0}
        assert dec.rn_derivative.at(1.0) == 0.25

    def test_identity(self):
        sigma = M.dirac_comb()
        dec = M.lebesgue_decompose(sigma, sigma)
        assert dec.singular_part.is_null()
        assert not dec.ac_part.is_null()
        assert dec.rn_derivative.at(7.0) == 1.0

    def test_comb_vs_lebesgue_fully_singular(self):
        dec = M.lebesgue_decompose(M.dirac_comb(), M.lebesgue())
        assert dec.ac_part.is_null()
        assert not dec.singular_part.is_null()

    def test_density_overlap(self):
        d1 = M.lebesgue((0, 1))
        d2 = M.DensityMeasure(expr="1", support=(0.5, 1.5))
        dec = M.lebesgue_decompose(d1, d2)
        assert abs(M.moment_integral(dec.ac_part, 0) - 0.5) < 1e-10
        assert abs(M.moment_integral(dec.singular_part, 0) - 0.5) < 1e-10
        assert dec.rn_derivative.at(0.75) == 1.0
        assert dec.rn_derivative.at(0.25) == 0.0

    def test_ifs_vs_density_singular(self):
        dec = M.lebesgue_decompose(M.cantor_measure(), M.lebesgue())
        assert dec.ac_part.is_null()

    def test_ifs_same_maps_different_probs(self):
        c1 = M.cantor_measure()
        c2 = M.SelfSimilarMeasure((1 / 3, 1 / 3), (0.0, 2 / 3), (0.3, 0.7))
        dec = M.lebesgue_decompose(c1, c2)
        assert dec.ac_part.is_null()
        dec2 = M.lebesgue_decompose(c1, c1)
        assert dec2.singular_part.is_null()

    def test_consistency_bounded_kernel(self):
        # integrating a bounded kernel against ac + singular recovers sigma1
        f = lambda u: 1.0 / (1.0 + np.asarray(u, float) ** 2)
        pairs = [
            (M.FiniteAtomicMeasure([(0, 1), (1, 2), (2.5, 0.5)]),
             M.FiniteAtomicMeasure([(1, 1), (3, 1)])),
            (M.lebesgue((0, 1)), M.DensityMeasure(expr="1", support=(0.5, 1.5))),
            (M.dirac_comb(), M.dirac_comb()),
        ]
        from specproc.decay import PowerDecay
        for s1, s2 in pairs:
            dec = M.lebesgue_decompose(s1, s2)
            kw = dict(decay=PowerDecay(1.0, 2.0, 1.0), smooth_tail=True)
            whole = s1.integrate(f, **kw).real
            parts = 0.0
            if not dec.ac_part.is_null():
                parts += dec.ac_part.integrate(f, **kw).real
            if not dec.singular_part.is_null():
                parts += dec.singular_part.integrate(f, **kw).real
            assert abs(whole - parts) <= 1e-9 * max(abs(whole), 1e-12)

    def test_unsupported_lattice_geometry(self):
        with pytest.raises(Unsupported):
            M.lebesgue_decompose(M.dirac_comb(), M.dirac_comb(spacing=0.5))


class TestIntegrationBackend:
    def test_lattice_needs_certificate(self):
        f = lambda u: np.exp(-np.abs(np.asarray(u, float)))
        with pytest.raises(UnreachableTolerance):
            M.dirac_comb().integrate(f, decay=None)

    def test_lattice_gaussian_certificate(self):
        f = lambda u: np.exp(-np.asarray(u, float) ** 2)
        res = M.dirac_comb().integrate(f, decay=GaussianDecay(1.0, 1.0))
        direct = sum(math.exp(-n * n) for n in range(-10, 11))
        assert abs(res.real - direct) < 1e-13

    def test_ifs_smooth_integrand(self):
        # E[exp(i u)] under the Cantor measure: independent oracle by the
        # infinite product formula prod cos(u 3^-k) e^{iu/2} ... use moments:
        # E[x] = 1/2, Var = 1/8 for the middle-thirds measure
        c = M.cantor_measure()
        mean = c.integrate(lambda u: np.asarray(u, float)).real
        second = c.integrate(lambda u: np.asarray(u, float) ** 2).real
        assert abs(mean - 0.5) < 1e-12
        assert abs(second - (0.125 + 0.25)) < 1e-10  # Var + mean^2

    def test_density_singularity(self):
        m = M.fbm_spectral_density(0.7)
        res = m.integrate(lambda u: np.exp(-np.asarray(u, float) ** 2),
                          decay=GaussianDecay(1.0, 1.0))
        assert res.error <= 1e-8 * abs(res.value)

    def test_error_bound_is_honest_for_comb_moment(self):
        res = M.moment_integral_result(M.dirac_comb(), 1)
        assert abs(res.real - PI_COTH_PI) <= max(res.error, 1e-12)


class TestConfig:
    @pytest.mark.parametrize("cfg", [
        {"kind": "lebesgue"},
        {"kind": "comb"},
        {"kind": "dirac", "location": 2.0, "weight": 3.0},
        {"kind": "fbm", "H": 0.3},
        {"kind": "cantor"},
        {"kind": "density", "expr": "exp(-u**2)"},
        {"kind": "atomic", "atoms": [[0.0, 1.0], [2.0, 0.5]]},
        {"kind": "lattice", "spacing": 0.5, "weight": "1"},
        {"kind": "ifs", "ratios": [0.25, 0.25], "offsets": [0.0, 0.75],
         "probs": [0.5, 0.5], "support": [0.0, 1.0]},
        {"kind": "mixture", "components": [[0.5, {"kind": "comb"}],
                                           [1.5, {"kind": "cantor"}]]},
        {"kind": "shifted", "offset": 1.0, "base": {"kind": "cantor"}},
    ])
    def test_roundtrip_preserves_moments(self, cfg):
        m1 = M.from_config(cfg)
        m2 = M.from_config(m1.to_config())
        assert abs(M.moment_integral(m1, 2) - M.moment_integral(m2, 2)) < 1e-12

    def test_unknown_kind(self):
        with pytest.raises(ConfigError):
            M.from_config({"kind": "nope"})

    def test_negative_weights_rejected(self):
        with pytest.raises(ConfigError):
            M.FiniteAtomicMeasure([(0.0, -1.0)])
        with pytest.raises(ConfigError):
            M.MixtureMeasure([(-0.5, M.dirac())])
        with pytest.raises(ConfigError):
            M.DensityMeasure(expr="u")

    def test_ifs_validation(self):
        with pytest.raises(ConfigError):
            M.SelfSimilarMeasure((1.2, 0.3), (0.0, 0.7), (0.5, 0.5))
        with pytest.raises(ConfigError):
            M.SelfSimilarMeasure((0.3, 0.3), (0.0, 0.7), (0.6, 0.6))

    def test_non_integrable_singularity_rejected(self):
        with pytest.raises(ConfigError):
            M.DensityMeasure(expr="abs(u)**-1.5")
