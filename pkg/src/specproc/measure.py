"""Spectral measures on the real line.

A spectral measure is represented by one of five kinds: a density against
Lebesgue measure (expression or callable), a finite atomic measure, an
infinite lattice of atoms, a self-similar measure generated by an iterated
function system on a compact interval, or a mixture/shift of those.

Every measure flattens to a list of primitive pieces; a single integration
backend integrates arbitrary (complex) functions against the pieces and
carries a certified error bound:

* finite atoms: exact summation,
* lattices: adaptive partial sums with analytic tail bounds (geometric for
  Gaussian-decaying integrands, Hurwitz-zeta for power decay, Euler-Maclaurin
  evaluation for smooth monotone tails such as moment weights),
* densities: piecewise adaptive quadrature split at singular points,
* self-similar parts: barycentric depth recursion with a second-order
  variance correction and a Lipschitz-type remainder bound.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as _sciint

from . import summation
from .decay import CompactSupport, GaussianDecay, PowerDecay
from .errors import ConfigError, NotAMeasure, UnreachableTolerance, Unsupported
from .expressions import Asymptotics, Expression

DEFAULT_RTOL = 1e-10
MAX_LATTICE_TERMS = 2 ** 21
MAX_IFS_NODES = 2 ** 22
_ATOM_MATCH_TOL = 1e-12


@dataclass(frozen=True)
class IntegralResult:
    value: complex
    error: float
    method: str

    @property
    def real(self) -> float:
        return float(np.real(self.value))


# ---------------------------------------------------------------------------
# primitive pieces

@dataclass
class DensityPart:
    fn: object                      # vectorized u -> m(u) >= 0
    lo: float
    hi: float
    coeff: float = 1.0
    singularities: tuple = ()       # ((point, exponent), ...)
    asympt: Asymptotics | None = None
    expr: Expression | None = None
    shift: float = 0.0              # fn evaluated as fn(u - shift)

    def density(self, u):
        u = np.asarray(u, dtype=float)
        return self.coeff * np.asarray(self.fn(u - self.shift), dtype=float)


@dataclass
class LatticePart:
    spacing: float
    weight: Expression              # weight of the atom at shift + spacing*n
    coeff: float = 1.0
    shift: float = 0.0


@dataclass
class IFSPart:
    ratios: tuple
    offsets: tuple
    probs: tuple
    lo: float
    hi: float
    coeff: float = 1.0
    depth_cap: int = 24

    @property
    def barycenter(self) -> float:
        num = sum(p * c for p, c in zip(self.probs, self.offsets))
        den = 1.0 - sum(p * r for p, r in zip(self.probs, self.ratios))
        return num / den

    @property
    def variance(self) -> float:
        b = self.barycenter
        num = sum(p * (r * b + c - b) ** 2
                  for p, r, c in zip(self.probs, self.ratios, self.offsets))
        den = 1.0 - sum(p * r * r for p, r in zip(self.probs, self.ratios))
        return num / den

    def nodes(self, depth: int):
        """Barycentric representatives (locations, probabilities, scales)."""
        locs = np.array([self.barycenter])
        probs = np.array([1.0])
        scales = np.array([1.0])
        for _ in range(depth):
            locs = np.concatenate([r * locs + c
                                   for r, c in zip(self.ratios, self.offsets)])
            probs = np.concatenate([p * probs for p in self.probs])
            scales = np.concatenate([r * scales for r in self.ratios])
        return locs, probs, scales


@dataclass
class MeasurePieces:
    atoms: list = field(default_factory=list)        # [(location, weight)]
    lattices: list = field(default_factory=list)
    densities: list = field(default_factory=list)
    ifs: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# piece integrators

def _quad_complex(f, a, b, **kw):
    kw.setdefault("limit", 200)
    re, re_err = _sciint.quad(lambda u: float(np.real(f(u))), a, b, **kw)
    im, im_err = _sciint.quad(lambda u: float(np.imag(f(u))), a, b, **kw)
    return re + 1j * im, re_err + im_err


def _weight_growth(weight: Expression):
    """Upper-envelope (coeff, power) for |weight(n)| at large n."""
    a = weight.asymptotics
    if not a.polynomial_bounded:
        return None
    safety = 1.0 if a.monomial else 2.0
    return safety * a.coeff, a.power


def _lattice_tail_bound(part, f_decay, n_next):
    """Bound the two-sided lattice tail sum_{|n| >= n_next} |w(n) f(loc_n)|."""
    growth = _weight_growth(part.weight)
    if growth is None or f_decay is None:
        return math.inf
    wc, wp = growth
    step = part.spacing
    # indices n with |n| >= n_next sit at locations |shift + step*n| >=
    # step*(|n| - k) with k = ceil(|shift|/step); re-index conservatively
    k = int(math.ceil(abs(part.shift) / step))
    n_eff = max(n_next - k, 1)
    if k > 0 and wp > 0:
        wc = wc * 2.0 ** wp          # (m+k)^g <= (2m)^g once m >= k
        n_eff = max(n_eff, k)
    if isinstance(f_decay, CompactSupport):
        if step * n_eff > f_decay.radius:
            return 0.0
        return math.inf
    if isinstance(f_decay, GaussianDecay):
        one_side = summation.gaussian_lattice_tail_bound(
            f_decay.coeff, f_decay.rate, step, n_eff, wp, wc)
    elif isinstance(f_decay, PowerDecay):
        if step * n_eff <= f_decay.cutoff:
            return math.inf
        one_side = summation.power_lattice_tail_bound(
            f_decay.coeff, f_decay.exponent, step, n_eff, wp, wc)
    else:
        return math.inf
    return 2.0 * abs(part.coeff) * one_side


def _integrate_lattice(part, f, decay, target, smooth_tail, max_terms):
    n_terms = 64
    while True:
        n = np.arange(-n_terms, n_terms + 1, dtype=float)
        w = part.weight(n)
        locs = part.shift + part.spacing * n
        vals = part.coeff * w * np.asarray(f(locs))
        partial = complex(vals.sum())
        round_err = 1e-16 * float(np.abs(vals).sum()) * math.log2(max(n_terms, 2))
        if smooth_tail:
            # tails of a smooth, eventually monotone real summand
            def make_side(sign):
                def g(x):
                    xx = np.asarray(x, dtype=float)
                    return part.coeff * part.weight(sign * xx) * np.real(
                        f(part.shift + part.spacing * sign * xx))
                return g
            tp, ep = summation.euler_maclaurin_tail(make_side(+1.0),
                                                    float(n_terms + 1))
            tm, em = summation.euler_maclaurin_tail(make_side(-1.0),
                                                    float(n_terms + 1))
            value = partial + tp + tm
            err = round_err + ep + em
            if err <= max(target, 1e-13 * abs(value)) \
                    or 2 * n_terms + 1 >= max_terms:
                return value, err, "lattice_sum+euler_maclaurin"
            n_terms *= 4
            continue
        bound = _lattice_tail_bound(part, decay, n_terms + 1)
        if bound <= target:
            return partial, round_err + bound, "lattice_sum"
        if 2 * n_terms + 1 >= max_terms:
            raise UnreachableTolerance(
                f"lattice tail bound {bound:.3g} above target {target:.3g} "
                f"after {2 * n_terms + 1} terms", value=partial, error=bound)
        n_terms *= 2


def _integrate_density(part, f, target, f_decay=None):
    inner = sorted(p for p, _ in part.singularities if part.lo < p < part.hi)
    # characteristic scale of the integrand, to keep adaptive quadrature from
    # overlooking narrow features on unbounded intervals
    scales = [0.0]
    if isinstance(f_decay, GaussianDecay) and f_decay.rate > 0:
        w = 1.0 / math.sqrt(f_decay.rate)
        scales += [-6 * w, -w, w, 6 * w]
    elif isinstance(f_decay, CompactSupport):
        scales += [-f_decay.radius, f_decay.radius]
    else:
        scales += [-1.0, 1.0]
    inner += [s for s in scales if part.lo < s < part.hi]
    breaks = [part.lo] + sorted(set(inner)) + [part.hi]
    total = 0.0 + 0.0j
    err = 0.0

    def integrand(u):
        val = part.density(u) * np.asarray(f(np.asarray(u, dtype=float)))
        return complex(np.asarray(val).reshape(-1)[0])

    eps = max(target / max(len(breaks), 2), 1e-14)
    for a, b in zip(breaks[:-1], breaks[1:]):
        if a >= b:
            continue
        v, e = _quad_complex(integrand, a, b, epsabs=eps, epsrel=1e-11)
        total += v
        err += e
    return total, err, "quadrature"


def _third_derivative_bound(f, lo, hi):
    """Numeric sup|f'''| on [lo, hi] from a five-point stencil (x1.5 margin)."""
    width = hi - lo
    h = max(width / 400.0, 1e-7)
    x = np.linspace(lo, hi, 241)
    vals = (np.asarray(f(x + 2 * h)) - 2 * np.asarray(f(x + h))
            + 2 * np.asarray(f(x - h)) - np.asarray(f(x - 2 * h))) / (2 * h ** 3)
    return 1.5 * float(np.max(np.abs(vals))) + 1e-12


def _integrate_ifs(part, f, target, max_nodes):
    m3 = _third_derivative_bound(f, part.lo, part.hi)
    width = part.hi - part.lo
    var = part.variance
    depth = 4
    while True:
        locs, probs, scales = part.nodes(depth)
        h = max(1e-6 * max(width, 1.0), 1e-9)
        fc = np.asarray(f(locs))
        d2 = (np.asarray(f(locs + h)) - 2 * fc + np.asarray(f(locs - h))) / h ** 2
        value = part.coeff * complex(np.sum(probs * (fc + 0.5 * d2 * scales ** 2 * var)))
        bound = abs(part.coeff) * (m3 / 6.0) * float(
            np.sum(probs * (scales * width) ** 3))
        if bound <= target or depth >= part.depth_cap \
                or len(locs) * len(part.ratios) > max_nodes:
            if bound > target:
                raise UnreachableTolerance(
                    f"IFS recursion bound {bound:.3g} above target {target:.3g} "
                    f"at depth {depth}", value=value, error=bound)
            return value, bound + 1e-15 * abs(value), "ifs_recursion"
        depth += 1


# ---------------------------------------------------------------------------
# measures

class SpectralMeasure:
    """Base class: immutable after construction, all operations pure."""

    kind = "abstract"

    def pieces(self) -> MeasurePieces:
        raise NotImplementedError

    def support_hull(self):
        """Smallest closed interval carrying the measure (may be infinite)."""
        lo, hi = math.inf, -math.inf
        pc = self.pieces()
        for loc, w in pc.atoms:
            if w != 0:
                lo, hi = min(lo, loc), max(hi, loc)
        for lat in pc.lattices:
            if lat.coeff != 0:
                return -math.inf, math.inf
        for d in pc.densities:
            if d.coeff != 0:
                lo, hi = min(lo, d.lo), max(hi, d.hi)
        for s in pc.ifs:
            if s.coeff != 0:
                lo, hi = min(lo, s.lo), max(hi, s.hi)
        if lo > hi:
            return 0.0, 0.0
        return lo, hi

    def is_null(self) -> bool:
        pc = self.pieces()
        return (all(w == 0 for _, w in pc.atoms) and not pc.lattices
                and not pc.densities and not pc.ifs)

    def integrate(self, f, decay=None, rtol=DEFAULT_RTOL, atol=1e-12,
                  smooth_tail=False, max_lattice_terms=MAX_LATTICE_TERMS,
                  max_ifs_nodes=MAX_IFS_NODES) -> IntegralResult:
        """Integrate a vectorized complex function against the measure.

        ``decay`` is a certificate bounding |f| at infinity (required for
        lattice parts unless ``smooth_tail`` announces a smooth, eventually
        monotone summand whose tail can be evaluated by Euler-Maclaurin).
        Raises UnreachableTolerance when the certified error cannot be
        brought below ``max(atol, rtol * |value|)``.
        """
        pc = self.pieces()
        total = 0.0 + 0.0j
        err = 0.0
        methods = []
        if pc.atoms:
            locs = np.array([a for a, _ in pc.atoms])
            ws = np.array([w for _, w in pc.atoms])
            vals = ws * np.asarray(f(locs))
            total += complex(vals.sum())
            err += 1e-16 * float(np.abs(vals).sum())
            methods.append("finite_sum")
        n_inf = len(pc.lattices) + len(pc.densities) + len(pc.ifs)
        target = max(atol, rtol * abs(total)) / max(n_inf, 1)
        for lat in pc.lattices:
            v, e, m = _integrate_lattice(lat, f, decay, target, smooth_tail,
                                         max_lattice_terms)
            total += v
            err += e
            methods.append(m)
        for den in pc.densities:
            v, e, m = _integrate_density(den, f, target, f_decay=decay)
            total += v
            err += e
            methods.append(m)
        for s in pc.ifs:
            v, e, m = _integrate_ifs(s, f, target, max_ifs_nodes)
            total += v
            err += e
            methods.append(m)
        allowance = max(atol, rtol * abs(total))
        if err > allowance and err > atol:
            raise UnreachableTolerance(
                f"integration error {err:.3g} exceeds allowance {allowance:.3g}",
                value=total, error=err)
        return IntegralResult(total, err, "+".join(sorted(set(methods))) or "empty")

    def bin_profile(self, edges, p: int):
        """Per-bin (variance, sigma-mass, sigma-centroid) for a frequency grid.

        ``variance`` is the measure of the bin against ``(1+u^2)^-p``; the
        centroid is the sigma-mass barycenter (atom location when a bin holds
        a single atom), falling back to the bin midpoint for empty bins.
        """
        edges = np.asarray(edges, dtype=float)
        nbins = len(edges) - 1
        var = np.zeros(nbins)
        mass = np.zeros(nbins)
        mom = np.zeros(nbins)
        pc = self.pieces()

        def add_atoms(locs, ws):
            locs = np.asarray(locs, dtype=float)
            ws = np.asarray(ws, dtype=float)
            idx = np.searchsorted(edges, locs, side="right") - 1
            idx[np.isclose(locs, edges[-1], atol=1e-12)] = nbins - 1
            ok = (idx >= 0) & (idx < nbins)
            np.add.at(var, idx[ok], ws[ok] / (1 + locs[ok] ** 2) ** p)
            np.add.at(mass, idx[ok], ws[ok])
            np.add.at(mom, idx[ok], ws[ok] * locs[ok])

        if pc.atoms:
            add_atoms([a for a, _ in pc.atoms], [w for _, w in pc.atoms])
        for lat in pc.lattices:
            n_lo = int(math.floor((edges[0] - lat.shift) / lat.spacing)) - 1
            n_hi = int(math.ceil((edges[-1] - lat.shift) / lat.spacing)) + 1
            n = np.arange(n_lo, n_hi + 1, dtype=float)
            add_atoms(lat.shift + lat.spacing * n, lat.coeff * lat.weight(n))
        for den in pc.densities:
            sing = sorted(pt for pt, _ in den.singularities)
            for j in range(nbins):
                a = max(edges[j], den.lo)
                b = min(edges[j + 1], den.hi)
                if a >= b:
                    continue
                cuts = [a] + [s for s in sing if a < s < b] + [b]
                for aa, bb in zip(cuts[:-1], cuts[1:]):
                    v, _ = _sciint.quad(
                        lambda u: float(den.density(u)) / (1 + u * u) ** p,
                        aa, bb, limit=60)
                    m0, _ = _sciint.quad(lambda u: float(den.density(u)),
                                         aa, bb, limit=60)
                    m1, _ = _sciint.quad(lambda u: u * float(den.density(u)),
                                         aa, bb, limit=60)
                    var[j] += v
                    mass[j] += m0
                    mom[j] += m1
        for s in pc.ifs:
            depth = min(s.depth_cap, 16)
            locs, probs, _ = s.nodes(depth)
            add_atoms(locs, s.coeff * probs)
        mid = 0.5 * (edges[:-1] + edges[1:])
        centroid = np.where(mass > 0, mom / np.maximum(mass, 1e-300), mid)
        return var, mass, centroid

    # -- config -------------------------------------------------------------

    def to_config(self) -> dict:
        raise NotImplementedError

    def config_key(self) -> str:
        return json.dumps(self.to_config(), sort_keys=True)

    def __repr__(self):
        return f"{type(self).__name__}({self.to_config()})"


class DensityMeasure(SpectralMeasure):
    """Absolutely continuous measure m(u) du on a (possibly infinite) interval."""

    kind = "density"

    def __init__(self, expr=None, support=(-math.inf, math.inf),
                 singularities=(), fn=None, asympt=None, config_extra=None):
        if expr is not None and isinstance(expr, str):
            expr = Expression(expr)
        if expr is not None:
            expr.check_nonnegative()
            fn = expr
            asympt = expr.asymptotics if asympt is None else asympt
            if not singularities and asympt.zero_exponent < 0:
                if asympt.zero_exponent <= -1:
                    raise ConfigError(
                        f"non-integrable singularity |u|^{asympt.zero_exponent}"
                        f" at 0 in {expr.source!r}")
                singularities = ((0.0, asympt.zero_exponent),)
        if fn is None:
            raise ConfigError("density needs an expression or a callable")
        for _, e in singularities:
            if e <= -1:
                raise ConfigError(f"singularity exponent {e} is not integrable")
        self.expr = expr
        self.fn = fn
        self.support = (float(support[0]), float(support[1]))
        self.singularities = tuple((float(a), float(b)) for a, b in singularities)
        self.asympt = asympt
        self._config_extra = config_extra

    def pieces(self):
        part = DensityPart(self.fn, self.support[0], self.support[1],
                           1.0, self.singularities, self.asympt, self.expr)
        return MeasurePieces(densities=[part])

    def to_config(self):
        if self._config_extra is not None:
            return dict(self._config_extra)
        cfg = {"kind": "density", "expr": self.expr.source if self.expr else None}
        if self.support != (-math.inf, math.inf):
            cfg["support"] = list(self.support)
        if self.singularities:
            cfg["singularities"] = [list(s) for s in self.singularities]
        return cfg


class FiniteAtomicMeasure(SpectralMeasure):
    """Finitely many atoms sum_i w_i * delta(u - a_i)."""

    kind = "atomic"

    def __init__(self, atoms):
        cleaned = {}
        for loc, w in atoms:
            w = float(w)
            if w < 0:
                raise ConfigError(f"negative atom weight {w} at {loc}")
            if w:
                cleaned[float(loc)] = cleaned.get(float(loc), 0.0) + w
        self.atoms = tuple(sorted(cleaned.items()))

    def pieces(self):
        return MeasurePieces(atoms=list(self.atoms))

    def to_config(self):
        return {"kind": "atomic", "atoms": [list(a) for a in self.atoms]}


class LatticeMeasure(SpectralMeasure):
    """Atoms at spacing * n, n in Z, with weights given by an index expression."""

    kind = "atomic"

    def __init__(self, spacing=1.0, weight="1"):
        if spacing <= 0:
            raise ConfigError("lattice spacing must be positive")
        if isinstance(weight, str):
            weight = Expression(weight, variable="n")
        weight.check_nonnegative()
        if not weight.asymptotics.polynomial_bounded:
            raise ConfigError("lattice weights must grow at most polynomially")
        self.spacing = float(spacing)
        self.weight = weight

    def pieces(self):
        return MeasurePieces(lattices=[LatticePart(self.spacing, self.weight)])

    def to_config(self):
        return {"kind": "lattice", "spacing": self.spacing,
                "weight": self.weight.source}


class SelfSimilarMeasure(SpectralMeasure):
    """Self-similar probability measure for an IFS of affine contractions."""

    kind = "ifs"

    def __init__(self, ratios, offsets, probs, support=(0.0, 1.0), depth=24):
        ratios = tuple(float(r) for r in ratios)
        offsets = tuple(float(c) for c in offsets)
        probs = tuple(float(p) for p in probs)
        if not (len(ratios) == len(offsets) == len(probs)) or len(ratios) < 2:
            raise ConfigError("IFS needs matching ratios/offsets/probs, >= 2 maps")
        if any(not 0 < r < 1 for r in ratios):
            raise ConfigError("IFS ratios must lie in (0, 1)")
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
            raise ConfigError("IFS probabilities must be nonnegative and sum to 1")
        lo, hi = float(support[0]), float(support[1])
        for r, c in zip(ratios, offsets):
            if r * lo + c < lo - 1e-12 or r * hi + c > hi + 1e-12:
                raise ConfigError("IFS maps must send the support into itself")
        self.ratios, self.offsets, self.probs = ratios, offsets, probs
        self.support = (lo, hi)
        self.depth = int(depth)

    def pieces(self):
        return MeasurePieces(ifs=[IFSPart(self.ratios, self.offsets, self.probs,
                                          self.support[0], self.support[1],
                                          1.0, self.depth)])

    def to_config(self):
        return {"kind": "ifs", "ratios": list(self.ratios),
                "offsets": list(self.offsets), "probs": list(self.probs),
                "support": list(self.support), "depth": self.depth}


class MixtureMeasure(SpectralMeasure):
    """Nonnegative combination sum_i c_i * sigma_i."""

    kind = "mixture"

    def __init__(self, components):
        comps = []
        for c, m in components:
            c = float(c)
            if c < 0:
                raise ConfigError(f"negative mixture coefficient {c}")
            if c:
                comps.append((c, m))
        self.components = tuple(comps)

    def pieces(self):
        out = MeasurePieces()
        for c, m in self.components:
            sub = m.pieces()
            out.atoms += [(a, c * w) for a, w in sub.atoms]
            out.lattices += [LatticePart(l.spacing, l.weight, c * l.coeff, l.shift)
                             for l in sub.lattices]
            out.densities += [DensityPart(d.fn, d.lo, d.hi, c * d.coeff,
                                          d.singularities, d.asympt, d.expr,
                                          d.shift)
                              for d in sub.densities]
            out.ifs += [IFSPart(s.ratios, s.offsets, s.probs, s.lo, s.hi,
                                c * s.coeff, s.depth_cap) for s in sub.ifs]
        return out

    def to_config(self):
        return {"kind": "mixture",
                "components": [[c, m.to_config()] for c, m in self.components]}


class ShiftedMeasure(SpectralMeasure):
    """Pushforward of a base measure under u -> u + offset."""

    kind = "shifted"

    def __init__(self, base, offset):
        self.base = base
        self.offset = float(offset)

    def pieces(self):
        sub = self.base.pieces()
        off = self.offset
        out = MeasurePieces()
        out.atoms = [(a + off, w) for a, w in sub.atoms]
        out.lattices = [LatticePart(l.spacing, l.weight, l.coeff, l.shift + off)
                        for l in sub.lattices]
        out.densities = [DensityPart(d.fn, d.lo + off, d.hi + off, d.coeff,
                                     tuple((pt + off, e) for pt, e in d.singularities),
                                     d.asympt, d.expr, d.shift + off)
                         for d in sub.densities]
        out.ifs = [IFSPart(s.ratios,
                           tuple(c + off * (1 - r)
                                 for r, c in zip(s.ratios, s.offsets)),
                           s.probs, s.lo + off, s.hi + off, s.coeff, s.depth_cap)
                   for s in sub.ifs]
        return out

    def to_config(self):
        return {"kind": "shifted", "offset": self.offset,
                "base": self.base.to_config()}


# ---------------------------------------------------------------------------
# named constructors

def lebesgue(support=(-math.inf, math.inf)) -> DensityMeasure:
    return DensityMeasure(expr="1", support=support)


def dirac_comb(spacing=1.0) -> LatticeMeasure:
    return LatticeMeasure(spacing=spacing, weight="1")


def dirac(location=0.0, weight=1.0) -> FiniteAtomicMeasure:
    return FiniteAtomicMeasure([(location, weight)])


def fbm_spectral_density(hurst: float) -> DensityMeasure:
    """Spectral density of fractional Brownian motion with Hurst index H.

    The normalization H(1-2H) / (Gamma(2-2H) cos(pi H)) makes the increment
    variance of the associated process equal to 2 |t|^(2H).
    """
    from scipy.special import gamma as _gamma
    if not 0 < hurst < 1 or hurst == 0.5:
        raise ConfigError("Hurst index must lie in (0,1) \\ {1/2}")
    c = float(hurst * (1 - 2 * hurst)
              / (_gamma(2 - 2 * hurst) * math.cos(math.pi * hurst)))
    a = float(1 - 2 * hurst)
    return DensityMeasure(expr=f"{c!r}*abs(u)**{a!r}",
                          config_extra={"kind": "fbm", "H": hurst})


def cantor_measure(depth=24) -> SelfSimilarMeasure:
    """Middle-thirds Cantor measure on [0, 1] with equal branch weights."""
    return SelfSimilarMeasure(ratios=(1 / 3, 1 / 3), offsets=(0.0, 2 / 3),
                              probs=(0.5, 0.5), support=(0.0, 1.0), depth=depth)


def zero_measure() -> FiniteAtomicMeasure:
    return FiniteAtomicMeasure(())


# ---------------------------------------------------------------------------
# moment integrals and growth classes

def _moment_weight(p):
    return lambda u: (1 + np.asarray(u, dtype=float) ** 2) ** (-p)


def _divergence_certificate(measure, p):
    """True when a piece certifiably makes the p-th moment integral infinite."""
    pc = measure.pieces()
    for den in pc.densities:
        a = den.asympt
        if a is None or den.coeff == 0:
            continue
        infinite_support = math.isinf(den.lo) or math.isinf(den.hi)
        if not infinite_support:
            continue
        if a.sign is not None and a.sign > 0 and a.coeff > 0:
            if not a.polynomial_bounded:
                return True
            if a.gauss == 0 and a.expo == 0 and a.power - 2 * p >= -1:
                return True
    for lat in pc.lattices:
        a = lat.weight.asymptotics
        if lat.coeff == 0:
            continue
        if a.sign is not None and a.sign > 0 and a.coeff > 0 \
                and a.power - 2 * p >= -1:
            return True
    return False


def moment_integral(measure, p: int, rtol=DEFAULT_RTOL) -> float:
    """Integral of (1+u^2)^-p against the measure; +inf on certified divergence."""
    if p < 0:
        raise ValueError("p must be a nonnegative integer")
    if _divergence_certificate(measure, p):
        return math.inf
    decay = PowerDecay(1.0, 2.0 * p, 1.0) if p >= 1 else None
    res = measure.integrate(_moment_weight(p), decay=decay, rtol=rtol,
                            smooth_tail=True)
    return res.real


def moment_integral_result(measure, p: int, rtol=DEFAULT_RTOL) -> IntegralResult:
    if _divergence_certificate(measure, p):
        return IntegralResult(math.inf, 0.0, "divergence_certificate")
    decay = PowerDecay(1.0, 2.0 * p, 1.0) if p >= 1 else None
    return measure.integrate(_moment_weight(p), decay=decay, rtol=rtol,
                             smooth_tail=True)


@dataclass(frozen=True)
class TemperedCertificate:
    in_class: bool
    p: int | None
    certificate: str        # "analytic" | "numeric"
    reason: str = ""


def _least_p_for_power(a: float) -> int:
    """Least natural p with a - 2p < -1."""
    p = 0
    while a - 2 * p >= -1:
        p += 1
    return p


def certify_tempered(measure, p_max: int = 8) -> TemperedCertificate:
    """Least p <= p_max with a finite (1+u^2)^-p moment, certified per kind.

    Compactly supported pieces need p=0; lattice and density pieces with
    polynomial asymptotics get an analytic exponent; anything else falls
    back to a numeric search.  An inconclusive search reports in_class=False
    with a reason rather than guessing.
    """
    pc = measure.pieces()
    p_req = 0
    analytic = True
    for den in pc.densities:
        if den.coeff == 0:
            continue
        if math.isfinite(den.lo) and math.isfinite(den.hi):
            continue
        a = den.asympt
        if a is None or a.sign is None:
            analytic = False
            continue
        if not a.polynomial_bounded:
            return TemperedCertificate(False, None, "analytic",
                                       "super-polynomial density growth")
        if a.gauss < 0 or a.expo < 0 or a.power < -1:
            continue
        p_req = max(p_req, _least_p_for_power(a.power))
    for lat in pc.lattices:
        if lat.coeff == 0:
            continue
        a = lat.weight.asymptotics
        if not a.polynomial_bounded:
            return TemperedCertificate(False, None, "analytic",
                                       "super-polynomial lattice weights")
        p_req = max(p_req, _least_p_for_power(a.power))
    if analytic:
        if p_req > p_max:
            return TemperedCertificate(False, None, "analytic",
                                       f"requires p={p_req} > p_max={p_max}")
        return TemperedCertificate(True, p_req, "analytic")
    for p in range(p_max + 1):
        try:
            v = moment_integral(measure, p, rtol=1e-8)
        except UnreachableTolerance:
            continue
        if math.isfinite(v):
            return TemperedCertificate(True, p, "numeric")
    return TemperedCertificate(False, None, "numeric",
                               f"no finite moment found for p <= {p_max}")


def growth_order(measure, p_max: int = 8) -> int:
    cert = certify_tempered(measure, p_max)
    if not cert.in_class:
        raise Unsupported(f"measure is not tempered: {cert.reason}")
    return cert.p


@dataclass(frozen=True)
class ShiftBoundCertificate:
    bounded: bool
    reason: str
    halfwidth: float | None = None

    def __bool__(self):
        return self.bounded


def certify_shift_bounded(measure) -> ShiftBoundCertificate:
    """Certificate-only test for the uniformly-shift-bounded class.

    Only families with an analytic certificate pass: measures with compact
    support hull and finite total mass (this covers finite atomic measures,
    compactly supported densities and self-similar measures).  The bound
    (1+|u+v|^2)^-q <= (2(1+u^2))^q / (1+v^2)^q on the support then gives the
    required uniform decay with q = p.  Everything else reports
    "no certificate" - membership is never claimed from sampling.
    """
    lo, hi = measure.support_hull()
    if math.isinf(lo) or math.isinf(hi):
        return ShiftBoundCertificate(False, "no certificate: unbounded support")
    try:
        mass = moment_integral(measure, 0, rtol=1e-8)
    except UnreachableTolerance:
        return ShiftBoundCertificate(False, "no certificate: mass not certified")
    if not math.isfinite(mass):
        return ShiftBoundCertificate(False, "no certificate: infinite mass")
    return ShiftBoundCertificate(True, "compact support with finite mass",
                                 max(abs(lo), abs(hi)))


# ---------------------------------------------------------------------------
# convolution

def _mass_is_finite(measure) -> bool:
    pc = measure.pieces()
    for den in pc.densities:
        if den.coeff == 0:
            continue
        if math.isfinite(den.lo) and math.isfinite(den.hi):
            continue
        a = den.asympt
        if a is None:
            return False
        if not a.polynomial_bounded:
            return False
        if not (a.gauss < 0 or a.expo < 0 or a.power < -1):
            return False
    for lat in pc.lattices:
        if lat.coeff != 0:
            return False
    return True


def _tails_nondecaying(measure) -> bool:
    for den in measure.pieces().densities:
        if den.coeff == 0:
            continue
        if math.isfinite(den.lo) and math.isfinite(den.hi):
            continue
        a = den.asympt
        if a is None:
            continue
        if a.gauss == 0 and a.expo == 0 and a.power >= 0 and \
                a.sign is not None and a.sign > 0:
            return True
    return False


def _is_finite_atomic(measure) -> bool:
    pc = measure.pieces()
    return bool(pc.atoms) and not pc.lattices and not pc.densities and not pc.ifs


def _shift_all(measure, offset, coeff):
    shifted = ShiftedMeasure(measure, offset) if offset else measure
    return (coeff, shifted)


def _convolution_kernel(d1: DensityPart, d2: DensityPart):
    """Lazy pointwise evaluation of (m1 * m2)(w) = int m1(u) m2(w-u) du."""
    def kernel(w):
        w = np.atleast_1d(np.asarray(w, dtype=float))
        out = np.zeros_like(w)
        for i, wi in enumerate(w):
            a = max(d1.lo, wi - d2.hi)
            b = min(d1.hi, wi - d2.lo)
            if a >= b:
                continue
            val, _ = _sciint.quad(
                lambda u: float(d1.density(u)) * float(d2.density(wi - u)),
                a, b, limit=100)
            out[i] = val
        return out if out.shape else float(out)
    return kernel


def convolve(m1: SpectralMeasure, m2: SpectralMeasure) -> SpectralMeasure:
    """Convolution within the representable algebra.

    Supported pairs: finite-atomic with anything representable by shifts
    (atoms, lattices, densities, self-similar parts), and density pairs with
    at least one compact support or both with integrable tails (lazy kernel).
    Raises NotAMeasure when both factors have infinite mass with
    non-decaying tails; Unsupported otherwise.
    """
    if isinstance(m1, MixtureMeasure):
        return MixtureMeasure([(c, convolve(comp, m2))
                               for c, comp in m1.components])
    if isinstance(m2, MixtureMeasure):
        return MixtureMeasure([(c, convolve(m1, comp))
                               for c, comp in m2.components])
    if isinstance(m1, ShiftedMeasure):
        return ShiftedMeasure(convolve(m1.base, m2), m1.offset)
    if isinstance(m2, ShiftedMeasure):
        return ShiftedMeasure(convolve(m1, m2.base), m2.offset)

    if _is_finite_atomic(m2) and not _is_finite_atomic(m1):
        return convolve(m2, m1)

    if _is_finite_atomic(m1):
        atoms1 = m1.pieces().atoms
        if _is_finite_atomic(m2):
            out = {}
            for a1, w1 in atoms1:
                for a2, w2 in m2.pieces().atoms:
                    loc = a1 + a2
                    out[loc] = out.get(loc, 0.0) + w1 * w2
            return FiniteAtomicMeasure(sorted(out.items()))
        comps = [_shift_all(m2, loc, w) for loc, w in atoms1]
        if len(comps) == 1 and comps[0][0] == 1.0:
            return comps[0][1]
        return MixtureMeasure(comps)

    if isinstance(m1, DensityMeasure) and isinstance(m2, DensityMeasure):
        if not _mass_is_finite(m1) and not _mass_is_finite(m2) \
                and _tails_nondecaying(m1) and _tails_nondecaying(m2):
            raise NotAMeasure(
                "convolution of two infinite-mass measures with "
                "non-decaying tails is not locally finite")
        d1 = m1.pieces().densities[0]
        d2 = m2.pieces().densities[0]
        compact1 = math.isfinite(d1.lo) and math.isfinite(d1.hi)
        compact2 = math.isfinite(d2.lo) and math.isfinite(d2.hi)
        if not (compact1 or compact2 or
                (_mass_is_finite(m1) and _mass_is_finite(m2))):
            raise Unsupported("density convolution needs a compact factor or "
                              "two integrable-tail factors")
        lo = d1.lo + d2.lo
        hi = d1.hi + d2.hi
        asympt = None
        if compact1 and d2.asympt is not None:
            asympt = d2.asympt
        elif compact2 and d1.asympt is not None:
            asympt = d1.asympt
        cfg = {"kind": "density",
               "convolution_of": [m1.to_config(), m2.to_config()]}
        return DensityMeasure(fn=_convolution_kernel(d1, d2),
                              support=(lo, hi), asympt=asympt,
                              config_extra=cfg)

    raise Unsupported(
        f"no convolution rule for kinds {type(m1).__name__} * {type(m2).__name__}")


# ---------------------------------------------------------------------------
# Lebesgue decomposition

@dataclass
class RadonNikodym:
    """Pointwise evaluator for the a.c. part's density relative to the base."""

    atom_ratios: dict
    density_rules: list          # [(lo, hi, num_density, den_density)]
    constant_rules: list         # [(lo, hi, value)] for matching IFS parts

    def at(self, u: float) -> float:
        for loc, ratio in self.atom_ratios.items():
            if abs(u - loc) <= _ATOM_MATCH_TOL:
                return ratio
        for lo, hi, c in self.constant_rules:
            if lo - 1e-12 <= u <= hi + 1e-12:
                return c
        for lo, hi, num, den in self.density_rules:
            if lo <= u <= hi:
                d = float(den(np.asarray([u]))[0])
                n = float(num(np.asarray([u]))[0])
                return n / d if d > 0 else 0.0
        return 0.0


@dataclass
class Decomposition:
    ac_part: SpectralMeasure
    singular_part: SpectralMeasure
    rn_derivative: RadonNikodym


def _lattice_atoms_in(lat: LatticePart, locs):
    """Weights of a lattice part at the given locations (0 if off-lattice)."""
    out = {}
    for loc in locs:
        n = (loc - lat.shift) / lat.spacing
        n_round = round(n)
        if abs(n - n_round) <= 1e-9:
            w = lat.coeff * float(lat.weight(np.asarray([float(n_round)]))[0])
            if w:
                out[loc] = w
    return out


def _all_atom_weight(pc: MeasurePieces, loc: float) -> float:
    w = sum(wt for a, wt in pc.atoms if abs(a - loc) <= _ATOM_MATCH_TOL)
    for lat in pc.lattices:
        w += _lattice_atoms_in(lat, [loc]).get(loc, 0.0)
    return w


def lebesgue_decompose(m1: SpectralMeasure, m2: SpectralMeasure) -> Decomposition:
    """Split m1 into parts absolutely continuous / singular relative to m2.

    Works structurally on the flattened pieces; pairs without a rule raise
    Unsupported rather than guessing.  Self-similar parts match only when
    they use identical maps; identical branch probabilities mean identical
    measures, different probabilities are mutually singular (distinct digit
    frequencies almost everywhere).
    """
    pc1, pc2 = m1.pieces(), m2.pieces()
    ac_parts = []
    sing_parts = []
    atom_ratios = {}

    # finite atoms of m1 against the atomic mass of m2
    ac_atoms = []
    sing_atoms = []
    for loc, w1 in pc1.atoms:
        w2 = _all_atom_weight(pc2, loc)
        if w2 > 0:
            ac_atoms.append((loc, w1))
            atom_ratios[loc] = w1 / w2
        else:
            sing_atoms.append((loc, w1))
    if ac_atoms:
        ac_parts.append((1.0, FiniteAtomicMeasure(ac_atoms)))
    if sing_atoms:
        sing_parts.append((1.0, FiniteAtomicMeasure(sing_atoms)))

    # lattices of m1
    for lat in pc1.lattices:
        full = LatticeMeasure(lat.spacing, lat.weight)
        wrapped = ShiftedMeasure(full, lat.shift) if lat.shift else full
        if pc2.lattices:
            match = [l2 for l2 in pc2.lattices
                     if abs(l2.spacing - lat.spacing) <= 1e-12
                     and abs(l2.shift - lat.shift) <= 1e-12]
            if not match:
                raise Unsupported("lattice pair with different geometry")
            l2 = match[0]
            ac_parts.append((lat.coeff, wrapped))
            # pointwise weight ratio, tabulated on a window around the origin
            for n in np.arange(-256, 257, dtype=float):
                loc = lat.shift + lat.spacing * n
                den = l2.coeff * float(l2.weight(np.asarray([n]))[0])
                num = lat.coeff * float(lat.weight(np.asarray([n]))[0])
                if den > 0:
                    atom_ratios[loc] = num / den
            continue
        shared = _lattice_atoms_in(lat, sorted({a for a, _ in pc2.atoms}))
        if shared:
            raise Unsupported(
                "a lattice sharing finitely many atoms with the base has no "
                "representable singular remainder")
        sing_parts.append((lat.coeff, wrapped))

    # densities of m1, matched against the (merged) density support of m2;
    # the derivative denominator is the total base density, summed over
    # whatever base pieces cover the point
    def merged_intervals(parts):
        ivs = sorted((d.lo, d.hi) for d in parts if d.coeff != 0)
        out = []
        for lo, hi in ivs:
            if out and lo <= out[-1][1]:
                out[-1] = (out[-1][0], max(out[-1][1], hi))
            else:
                out.append((lo, hi))
        return out

    def total_density(parts):
        def fn(u):
            uu = np.asarray(u, dtype=float)
            tot = np.zeros(uu.shape)
            for d in parts:
                inside = (uu >= d.lo) & (uu <= d.hi)
                if inside.any():
                    tot = tot + np.where(inside, d.density(uu), 0.0)
            return tot
        return fn

    density_rules = []
    base_cover = merged_intervals(pc2.densities)
    base_total = total_density(pc2.densities)
    for d1 in pc1.densities:
        covered = []
        for blo, bhi in base_cover:
            lo = max(d1.lo, blo)
            hi = min(d1.hi, bhi)
            if hi - lo <= 0:
                continue
            covered.append((lo, hi))
            piece = DensityMeasure(
                fn=(lambda f: (lambda u: np.asarray(f(u))))(d1.density),
                support=(lo, hi),
                singularities=tuple((pt, e) for pt, e in d1.singularities
                                    if lo < pt < hi),
                asympt=d1.asympt,
                config_extra={"kind": "density", "restriction_of": "pieces",
                              "support": [lo, hi]})
            ac_parts.append((1.0, piece))
            density_rules.append((lo, hi, d1.density, base_total))
        cursor = d1.lo
        leftovers = []
        for lo, hi in sorted(covered):
            if lo > cursor:
                leftovers.append((cursor, lo))
            cursor = max(cursor, hi)
        if cursor < d1.hi:
            leftovers.append((cursor, d1.hi))
        for lo, hi in leftovers:
            if hi - lo <= 0:
                continue
            piece = DensityMeasure(
                fn=(lambda f: (lambda u: np.asarray(f(u))))(d1.density),
                support=(lo, hi),
                singularities=tuple((pt, e) for pt, e in d1.singularities
                                    if lo < pt < hi),
                asympt=d1.asympt,
                config_extra={"kind": "density", "restriction_of": "pieces",
                              "support": [lo, hi]})
            sing_parts.append((1.0, piece))

    # self-similar parts of m1
    constant_rules = []
    for s1 in pc1.ifs:
        matched = None
        for s2 in pc2.ifs:
            same_maps = (len(s1.ratios) == len(s2.ratios)
                         and np.allclose(s1.ratios, s2.ratios, atol=1e-12)
                         and np.allclose(s1.offsets, s2.offsets, atol=1e-12)
                         and (s1.lo, s1.hi) == (s2.lo, s2.hi))
            if not same_maps:
                continue
            if np.allclose(s1.probs, s2.probs, atol=1e-12):
                matched = s2
            else:
                matched = "singular"
            break
        meas = SelfSimilarMeasure(s1.ratios, s1.offsets, s1.probs,
                                  (s1.lo, s1.hi), s1.depth_cap)
        if matched is None and pc2.ifs:
            raise Unsupported("self-similar pair with different maps")
        if matched is None or matched == "singular":
            sing_parts.append((s1.coeff, meas))
        else:
            ac_parts.append((s1.coeff, meas))
            constant_rules.append((s1.lo, s1.hi, s1.coeff / matched.coeff))

    def assemble(parts):
        if not parts:
            return zero_measure()
        if len(parts) == 1 and parts[0][0] == 1.0:
            return parts[0][1]
        return MixtureMeasure(parts)

    rn = RadonNikodym(atom_ratios, density_rules, constant_rules)
    return Decomposition(assemble(ac_parts), assemble(sing_parts), rn)


# ---------------------------------------------------------------------------
# configuration

def from_config(cfg) -> SpectralMeasure:
    """Build a measure from a JSON-style dict (or a path to a JSON file)."""
    if isinstance(cfg, (str,)):
        with open(cfg, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError("measure config must be a dict with a 'kind' field")
    kind = cfg["kind"]
    if kind == "lebesgue":
        return lebesgue(tuple(cfg.get("support", (-math.inf, math.inf))))
    if kind == "comb":
        return dirac_comb(cfg.get("spacing", 1.0))
    if kind == "dirac":
        return dirac(cfg.get("location", 0.0), cfg.get("weight", 1.0))
    if kind == "fbm":
        return fbm_spectral_density(cfg["H"])
    if kind == "cantor":
        return cantor_measure(cfg.get("depth", 24))
    if kind == "density":
        if "convolution_of" in cfg:
            a = from_config(cfg["convolution_of"][0])
            b = from_config(cfg["convolution_of"][1])
            return convolve(a, b)
        support = tuple(cfg.get("support", (-math.inf, math.inf)))
        return DensityMeasure(expr=cfg["expr"], support=support,
                              singularities=tuple(
                                  tuple(s) for s in cfg.get("singularities", ())))
    if kind == "atomic":
        return FiniteAtomicMeasure([tuple(a) for a in cfg["atoms"]])
    if kind == "lattice":
        return LatticeMeasure(cfg.get("spacing", 1.0), cfg.get("weight", "1"))
    if kind == "ifs":
        return SelfSimilarMeasure(cfg["ratios"], cfg["offsets"], cfg["probs"],
                                  tuple(cfg.get("support", (0.0, 1.0))),
                                  cfg.get("depth", 24))
    if kind == "mixture":
        return MixtureMeasure([(c, from_config(sub))
                               for c, sub in cfg["components"]])
    if kind == "shifted":
        return ShiftedMeasure(from_config(cfg["base"]), cfg["offset"])
    raise ConfigError(f"unknown measure kind {kind!r}")
