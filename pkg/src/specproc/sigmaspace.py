"""The Hilbert space of weighted-measure classes f sqrt(dsigma).

Two pairs (f1, sigma1), (f2, sigma2) represent the same element when
f1 sqrt(dsigma1/dlambda) = f2 sqrt(dsigma2/dlambda) almost everywhere for a
common dominating lambda (lambda = sigma1 + sigma2 suffices).  The inner
product

    <f1 sqrt(dsigma1), f2 sqrt(dsigma2)>
        = int f1 conj(f2) sqrt(dsigma1/dlambda * dsigma2/dlambda) dlambda

is evaluated structurally on the flattened pieces: shared atoms contribute
f1 conj(f2) sqrt(w1 w2), overlapping densities integrate
f1 conj(f2) sqrt(m1 m2), matching self-similar parts pair weight-wise, and
structurally singular combinations contribute exactly zero.  Mutual
singularity is decided by the same structural rules, never by thresholding
a quadrature value.

The correlation of two spectral processes driven by a common noise equals
this pairing of their transform classes; correlation_mc verifies that by
simulating both processes from one normal field on the combined measure,
splitting the bin weights by square-root Radon-Nikodym factors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _sciint

from . import decay as _decay
from .decay import GaussianDecay
from .errors import Unsupported
from .measure import (MixtureMeasure, SpectralMeasure, lebesgue_decompose)
from .qform import hermitian_form
from .testfn import TestFunction
from .expressions import Expression


class SigmaFunction:
    """A pair (f, sigma): the class f sqrt(dsigma) in the Hilbert space.

    ``f`` may be an expression (string or Expression) over the frequency
    variable, a TestFunction (its transform is used), a dict mapping atom
    locations to values, a plain number, or any vectorized callable.
    """

    def __init__(self, f, sigma: SpectralMeasure):
        self.sigma = sigma
        self._table = None
        self._testfn = None
        self._norm_cache = None
        if isinstance(f, str):
            f = Expression(f)
        if isinstance(f, dict):
            self._table = {float(k): complex(v) for k, v in f.items()}
            self.f = None
        elif isinstance(f, TestFunction):
            self._testfn = f
            self.f = f.fourier
        elif isinstance(f, (int, float, complex)):
            c = complex(f)
            self.f = lambda u: np.full(np.shape(u), c, dtype=complex)
        else:
            self.f = f

    def eval(self, u):
        u = np.asarray(u, dtype=float)
        if self._table is not None:
            out = np.zeros(u.shape, dtype=complex)
            for loc, val in self._table.items():
                out[np.isclose(u, loc, atol=1e-12)] = val
            return out
        return np.asarray(self.f(u), dtype=complex)

    def value_decay(self):
        if self._table is not None:
            radius = max((abs(k) for k in self._table), default=0.0)
            return _decay.CompactSupport(radius)
        if self._testfn is not None:
            return self._testfn.fourier_decay()
        if isinstance(self.f, Expression):
            a = self.f.asymptotics
            if a.gauss < 0:
                return GaussianDecay(2.0 * a.coeff, -a.gauss, 1.0)
        return None

    def norm_squared(self) -> float:
        if self._norm_cache is None:
            self._norm_cache = float(np.real(inner_product(self, self)))
        return self._norm_cache


def _atom_level_sum(pcs1, pcs2, f1, f2):
    """Pairing over the shared atomic structure of the two measures."""
    total = 0.0 + 0.0j
    atoms1 = dict(pcs1.atoms)
    atoms2 = dict(pcs2.atoms)

    def lattice_weight(pcs, loc):
        w = 0.0
        for lat in pcs.lattices:
            n = (loc - lat.shift) / lat.spacing
            if abs(n - round(n)) <= 1e-9:
                w += lat.coeff * float(lat.weight(np.asarray([round(n)]))[0])
        return w

    locs = sorted(set(atoms1) | set(atoms2))
    for loc in locs:
        w1 = atoms1.get(loc, 0.0) + lattice_weight(pcs1, loc)
        w2 = atoms2.get(loc, 0.0) + lattice_weight(pcs2, loc)
        if loc in atoms1 or loc in atoms2:
            if w1 > 0 and w2 > 0:
                a = complex(f1.eval(np.asarray([loc]))[0])
                b = complex(f2.eval(np.asarray([loc]))[0])
                total += a * np.conj(b) * math.sqrt(w1 * w2)

    # lattice against lattice with identical geometry: infinite shared set
    for lat1 in pcs1.lattices:
        for lat2 in pcs2.lattices:
            if abs(lat1.spacing - lat2.spacing) > 1e-12 or \
                    abs(lat1.shift - lat2.shift) > 1e-12:
                raise Unsupported("lattice pair with different geometry")
            d1, d2 = f1.value_decay(), f2.value_decay()
            dec = _decay.product(d1, d2)
            if dec is None:
                raise Unsupported("lattice-lattice pairing needs decay "
                                  "certificates on both weight functions")
            n_terms = 64
            while True:
                n = np.arange(-n_terms, n_terms + 1, dtype=float)
                u = lat1.shift + lat1.spacing * n
                w1 = lat1.coeff * lat1.weight(n)
                w2 = lat2.coeff * lat2.weight(n)
                vals = f1.eval(u) * np.conj(f2.eval(u)) * np.sqrt(
                    np.maximum(w1, 0) * np.maximum(w2, 0))
                part = complex(vals.sum())
                growth = math.sqrt(max(float(np.max(w1[-1])), 0.0)
                                   * max(float(np.max(w2[-1])), 0.0))
                if isinstance(dec, _decay.CompactSupport):
                    if lat1.spacing * (n_terms + 1) > dec.radius + abs(lat1.shift):
                        total += part
                        break
                elif isinstance(dec, GaussianDecay):
                    from .summation import gaussian_lattice_tail_bound
                    bound = 2 * growth * gaussian_lattice_tail_bound(
                        dec.coeff, dec.rate, lat1.spacing,
                        max(n_terms + 1 - int(abs(lat1.shift / lat1.spacing)) - 1, 1))
                    if bound < 1e-12 * max(abs(part), 1.0):
                        total += part
                        break
                else:
                    raise Unsupported("lattice-lattice pairing needs compact "
                                      "or Gaussian decay")
                if n_terms > 2 ** 18:
                    raise Unsupported("lattice-lattice pairing did not converge")
                n_terms *= 2
    return total


def inner_product(a: SigmaFunction, b: SigmaFunction) -> complex:
    """Hermitian pairing of two measure-weighted classes (see module doc)."""
    pcs1, pcs2 = a.sigma.pieces(), b.sigma.pieces()
    total = _atom_level_sum(pcs1, pcs2, a, b)

    # density overlaps: pair the total densities so that stacked pieces
    # (mixtures) combine under the square root rather than term by term
    dens1, dens2 = pcs1.densities, pcs2.densities
    if dens1 and dens2:
        def total_density(parts):
            def fn(u):
                uu = np.asarray([u], dtype=float)
                tot = 0.0
                for d in parts:
                    if d.lo <= u <= d.hi:
                        tot += float(d.density(uu))
                return max(tot, 0.0)
            return fn

        m1tot = total_density(dens1)
        m2tot = total_density(dens2)

        def covered(parts, u):
            return any(d.lo <= u <= d.hi for d in parts)

        pts = set()
        for d in dens1 + dens2:
            for val in (d.lo, d.hi):
                if math.isfinite(val):
                    pts.add(val)
            pts.update(pt for pt, _ in d.singularities)
        breaks = sorted(pts)
        segments = []
        if any(math.isinf(d.lo) for d in dens1) and \
                any(math.isinf(d.lo) for d in dens2):
            segments.append((-math.inf, breaks[0] if breaks else 0.0))
        segments += list(zip(breaks[:-1], breaks[1:]))
        if any(math.isinf(d.hi) for d in dens1) and \
                any(math.isinf(d.hi) for d in dens2):
            segments.append((breaks[-1] if breaks else 0.0, math.inf))

        def integrand(u):
            fa = complex(a.eval(np.asarray([u]))[0])
            fb = complex(b.eval(np.asarray([u]))[0])
            return fa * np.conj(fb) * math.sqrt(m1tot(u) * m2tot(u))

        for aa, bb in segments:
            if aa >= bb:
                continue
            mid = 0.5 * (aa + bb) if math.isfinite(aa) and math.isfinite(bb) \
                else (bb - 1.0 if math.isfinite(bb) else aa + 1.0)
            if not (covered(dens1, mid) and covered(dens2, mid)):
                continue
            re, _ = _sciint.quad(lambda u: integrand(u).real, aa, bb,
                                 limit=200, epsabs=1e-12, epsrel=1e-10)
            im, _ = _sciint.quad(lambda u: integrand(u).imag, aa, bb,
                                 limit=200, epsabs=1e-12, epsrel=1e-10)
            total += re + 1j * im

    # matching self-similar parts
    for s1 in pcs1.ifs:
        for s2 in pcs2.ifs:
            same_maps = (len(s1.ratios) == len(s2.ratios)
                         and np.allclose(s1.ratios, s2.ratios, atol=1e-12)
                         and np.allclose(s1.offsets, s2.offsets, atol=1e-12)
                         and (s1.lo, s1.hi) == (s2.lo, s2.hi))
            if not same_maps:
                if pcs1.ifs and pcs2.ifs:
                    raise Unsupported("self-similar pair with different maps")
                continue
            if not np.allclose(s1.probs, s2.probs, atol=1e-12):
                continue        # mutually singular: zero contribution
            from .measure import IFSPart, _integrate_ifs

            def pair_fn(u):
                return a.eval(u) * np.conj(b.eval(u))
            unit = IFSPart(s1.ratios, s1.offsets, s1.probs, s1.lo, s1.hi,
                           1.0, s1.depth_cap)
            v, _, _ = _integrate_ifs(unit, pair_fn, 1e-10, 2 ** 22)
            total += math.sqrt(s1.coeff * s2.coeff) * v
    return complex(total)


def mutually_singular(sigma1: SpectralMeasure, sigma2: SpectralMeasure) -> bool:
    """Structural test: both absolutely continuous parts vanish."""
    d12 = lebesgue_decompose(sigma1, sigma2)
    d21 = lebesgue_decompose(sigma2, sigma1)
    return d12.ac_part.is_null() and d21.ac_part.is_null()


def process_correlation(sigma1: SpectralMeasure, f: TestFunction,
                        sigma2: SpectralMeasure, g: TestFunction) -> complex:
    """Correlation of the two spectral processes on a common noise space.

    Equals the Hilbert-space pairing of f-hat sqrt(dsigma1) with
    g-hat sqrt(dsigma2); in particular it vanishes identically when the
    measures are mutually singular.
    """
    return inner_product(SigmaFunction(f, sigma1), SigmaFunction(g, sigma2))


def equiv_check(a: SigmaFunction, b: SigmaFunction, tol: float = 1e-9) -> bool:
    """Whether the two pairs represent the same class.

    Checked through norms: ||a - b||^2 <= tol * (||a||^2 + ||b||^2); mutually
    singular carriers short-circuit to False unless both classes are zero.
    """
    if a is b:
        return True
    if mutually_singular(a.sigma, b.sigma):
        # equal only if both classes are zero; a norm that cannot even be
        # certified finite is certainly not the zero class
        def is_zero(s):
            try:
                return s.norm_squared() <= 1e-300
            except Unsupported:
                return False
        return is_zero(a) and is_zero(b)
    na = a.norm_squared()
    nb = b.norm_squared()
    cross = inner_product(a, b)
    gap = na - 2.0 * float(np.real(cross)) + nb
    return gap <= tol * (na + nb)


# ---------------------------------------------------------------------------
# Monte Carlo verification on a common normal field

@dataclass
class CommonGridCell:
    rep: float
    v1: float
    v2: float


@dataclass
class CorrelationMC:
    estimate: float
    std_error: float
    n_samples: int
    grid_target: float
    symmetrized: bool


def _continuous_profile(pieces, edges, p):
    """Bin variances of the density + self-similar parts only."""
    nb = len(edges) - 1
    var = np.zeros(nb)
    for den in pieces.densities:
        for j in range(nb):
            lo = max(edges[j], den.lo)
            hi = min(edges[j + 1], den.hi)
            if lo >= hi:
                continue
            sing = sorted({pt for pt, _ in den.singularities if lo < pt < hi})
            for aa, bb in zip([lo] + sing, sing + [hi]):
                v, _ = _sciint.quad(
                    lambda u: float(den.density(u)) / (1 + u * u) ** p,
                    aa, bb, limit=60)
                var[j] += v
    for s in pieces.ifs:
        locs, probs, _ = s.nodes(min(s.depth_cap, 14))
        idx = np.searchsorted(edges, locs, side="right") - 1
        ok = (idx >= 0) & (idx < nb)
        np.add.at(var, idx[ok], s.coeff * probs[ok] / (1 + locs[ok] ** 2) ** p)
    return var


def _atom_cells(pieces, u_max):
    out = {}
    for loc, w in pieces.atoms:
        if abs(loc) <= u_max:
            out[loc] = out.get(loc, 0.0) + w / (1 + loc * loc)
    for lat in pieces.lattices:
        n_hi = int(math.floor((u_max - lat.shift) / lat.spacing))
        n_lo = int(math.ceil((-u_max - lat.shift) / lat.spacing))
        n = np.arange(n_lo, n_hi + 1, dtype=float)
        ws = lat.coeff * lat.weight(n)
        locs = lat.shift + lat.spacing * n
        for loc, w in zip(locs, ws):
            if w:
                out[float(loc)] = out.get(float(loc), 0.0) + w / (1 + loc * loc)
    return out


def correlation_mc(sigma1: SpectralMeasure, f: TestFunction,
                   sigma2: SpectralMeasure, g: TestFunction,
                   n_samples: int = 20000, seed: int = 0,
                   u_max: float = 40.5, bins: int = 324) -> CorrelationMC:
    """Simulate both processes from one normal field and correlate them.

    The field lives on the combined measure; each process takes the bin draw
    scaled by sqrt of its own share of the bin variance.  Atoms get their own
    point cells so the Radon-Nikodym split is exact on the atomic part.
    Asymmetric inputs are symmetrized (recorded in the result), which leaves
    the pairing unchanged for measures carried on a common support.
    """
    if bins % 2:
        bins += 1       # even count: no bin straddles zero
    pcs1, pcs2 = sigma1.pieces(), sigma2.pieces()
    atoms1 = _atom_cells(pcs1, u_max)
    atoms2 = _atom_cells(pcs2, u_max)
    from .gproc import symmetric_edges
    edges = symmetric_edges(u_max, bins)
    cont1 = _continuous_profile(pcs1, edges, 1)
    cont2 = _continuous_profile(pcs2, edges, 1)
    mids = 0.5 * (edges[:-1] + edges[1:])

    cells = []
    locs = sorted(set(atoms1) | set(atoms2))
    for loc in locs:
        cells.append(CommonGridCell(loc, atoms1.get(loc, 0.0),
                                    atoms2.get(loc, 0.0)))
    for j in range(bins):
        cells.append(CommonGridCell(float(mids[j]), float(cont1[j]),
                                    float(cont2[j])))

    # mirror-pair the cells about zero
    by_rep = {round(c.rep, 12): c for c in cells}
    symmetric = True
    pos = []
    for c in cells:
        key = round(c.rep, 12)
        mkey = round(-c.rep, 12)
        mirror = by_rep.get(mkey)
        if mirror is None:
            symmetric = False
            mirror = CommonGridCell(-c.rep, 0.0, 0.0)
        if key > mkey:
            v1 = 0.5 * (c.v1 + mirror.v1)
            v2 = 0.5 * (c.v2 + mirror.v2)
            if not (math.isclose(c.v1, mirror.v1, rel_tol=1e-9, abs_tol=1e-15)
                    and math.isclose(c.v2, mirror.v2, rel_tol=1e-9,
                                     abs_tol=1e-15)):
                symmetric = False
            pos.append((c.rep, v1, v2))
        elif key == mkey:       # cell at the origin is its own mirror
            pos.append((0.0, 0.5 * c.v1, 0.5 * c.v2))

    u = np.array([c[0] for c in pos])
    v1 = np.array([c[1] for c in pos])
    v2 = np.array([c[2] for c in pos])
    scale = math.sqrt(2.0) * np.sqrt(1 + u ** 2)
    fa = f.fourier(u)
    ga = g.fourier(u)
    w1 = np.concatenate([scale * np.sqrt(v1) * np.real(fa),
                         -scale * np.sqrt(v1) * np.imag(fa)])
    w2 = np.concatenate([scale * np.sqrt(v2) * np.real(ga),
                         -scale * np.sqrt(v2) * np.imag(ga)])
    target = float(np.sum(2.0 * (1 + u ** 2) * np.sqrt(v1 * v2)
                          * np.real(fa * np.conj(ga))))

    rng = np.random.Generator(np.random.Philox(key=[int(seed) & (2 ** 64 - 1),
                                                    2 ** 62]))
    acc = 0.0
    acc2 = 0.0
    remaining = int(n_samples)
    chunk = 65536
    while remaining > 0:
        m = min(chunk, remaining)
        z = rng.standard_normal((m, len(w1)))
        prod = (z @ w1) * (z @ w2)
        acc += float(prod.sum())
        acc2 += float((prod ** 2).sum())
        remaining -= m
    mean = acc / n_samples
    var = max(acc2 / n_samples - mean * mean, 0.0)
    se = math.sqrt(var / n_samples)
    return CorrelationMC(mean, se, int(n_samples), target, not symmetric)


class WeightedKernel:
    """Transform f-hat multiplied by a bounded frequency weight.

    Used for the consistency identity: pairing two classes over the combined
    measure equals the hermitian form of the weighted kernels against it.
    """

    def __init__(self, base: TestFunction, weight):
        self.base = base
        self.weight = weight

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        return self.base.fourier(u) * np.asarray(self.weight(u), dtype=complex)

    def fourier_decay(self):
        return self.base.fourier_decay()     # the weight is bounded by 1


def rn_weighted_kernel(base: TestFunction, numerator: SpectralMeasure,
                       dominating: SpectralMeasure) -> WeightedKernel:
    """Kernel with transform f-hat sqrt(d numerator / d dominating)."""
    dec = lebesgue_decompose(numerator, dominating)

    def weight(u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        return np.sqrt(np.clip([dec.rn_derivative.at(x) for x in u], 0.0, None))
    return WeightedKernel(base, weight)


def pairing_via_forms(sigma1: SpectralMeasure, f: TestFunction,
                      sigma2: SpectralMeasure, g: TestFunction) -> complex:
    """Evaluate the pairing as a hermitian form over sigma1 + sigma2."""
    lam = MixtureMeasure([(1.0, sigma1), (1.0, sigma2)])
    k1 = rn_weighted_kernel(f, sigma1, lam)
    k2 = rn_weighted_kernel(g, sigma2, lam)
    return hermitian_form(k1, k2, lam).value
