"""Covariance structure and sample-path synthesis of the spectral process.

The process indexed by time evaluates the frequency kernel
xi_t(u) = (exp(itu)-1)/u against the measure:

    r(t, s) = Re int xi_t(u) conj(xi_s(u)) dsigma(u),

which is the covariance of the real stationary-increment Gaussian process
realized here.  Sample paths come from a discretized spectral synthesis: the
frequency axis is cut into bins carrying variances int_bin dsigma/(1+u^2),
mirrored bins are driven by one complex Gaussian coefficient (Hermitian
conjugate on the negative side, which makes the paths real), and

    X(t) = sum_j sqrt(2) sqrt(1+u_j^2) sqrt(v_j)
           [Re xi_t(u_j) g_j - Im xi_t(u_j) h_j]

over positive-side bins with independent standard normals g, h.  Streams are
counter-based (Philox4x64 keyed by (seed, path index)), so ensembles are
reproducible bit-for-bit independently of worker count.

Asymmetric measures are symmetrized, (sigma(du)+sigma(-du))/2, which leaves
r(t, s) unchanged; the ensemble records when that happened.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import integrate as _sciint

from . import summation
from .errors import (ConfigError, InconsistentGrid, InsufficientPairs,
                     UnreachableTolerance, Unsupported)
from .measure import (SpectralMeasure, certify_tempered, moment_integral,
                      DEFAULT_RTOL)
from .qform import hermitian_form, quadratic_form
from .testfn import IncrementKernel, TestFunction


# ---------------------------------------------------------------------------
# pointwise covariance

def _real_pair_bracket(t, s):
    """cos((t-s)u) - cos(tu) - cos(su) + 1, evaluated stably through xi."""
    xt, xs = IncrementKernel(t), IncrementKernel(s)

    def f(u):
        return np.real(xt.fourier(u) * np.conj(xs.fourier(u)))
    return f


def _lattice_covariance(part, t, s, target, max_terms=2 ** 20):
    """Covariance sum over an unshifted lattice by frequency decomposition.

    Splits Re[xi_t conj(xi_s)] into four cosine sums; frequencies congruent
    to 0 modulo the reciprocal lattice get an Euler-Maclaurin tail value,
    the rest a Dirichlet-test tail bound 2 a_N / |sin(theta VDelta / 2)|.
    """
    if part.shift != 0.0:
        raise Unsupported("lattice covariance requires an unshifted lattice")
    step = part.spacing
    freqs = ((1.0, t - s), (-1.0, t), (-1.0, -s), (1.0, 0.0))
    w0 = float(part.weight(np.asarray([0.0]))[0])
    value0 = part.coeff * w0 * t * s        # atom at the origin
    n_terms = 4096
    while True:
        n = np.arange(1, n_terms + 1, dtype=float)
        w_pos = part.weight(n)
        w_neg = part.weight(-n)
        u = step * n
        inv_u2 = 1.0 / (u * u)
        total = value0
        err = 0.0
        ok = True
        for coef, theta in freqs:
            c = np.cos(theta * u)
            partial = part.coeff * float(np.sum((w_pos + w_neg) * c * inv_u2))
            rem = math.remainder(theta * step, 2.0 * math.pi)
            if abs(rem) < 1e-12:
                # constant sampled phase: smooth monotone tail per side
                def side(sign):
                    def g(x):
                        xx = np.asarray(x, dtype=float)
                        return part.coeff * part.weight(sign * xx) / (step * xx) ** 2
                    return summation.euler_maclaurin_tail(g, float(n_terms + 1))
                tp, ep = side(+1.0)
                tm, em = side(-1.0)
                total += coef * (partial + tp + tm)
                err += ep + em
            else:
                a_first = abs(part.coeff) * max(
                    float(abs(part.weight(np.asarray([n_terms + 1.0]))[0])),
                    float(abs(part.weight(np.asarray([-(n_terms + 1.0)]))[0]))) \
                    / (step * (n_terms + 1)) ** 2
                bound = 2.0 * summation.dirichlet_tail_bound(a_first, theta * step)
                if bound > target / 3.0:
                    ok = False
                    break
                total += coef * partial
                err += bound
        if ok and err <= target:
            return total, err
        if 2 * n_terms >= max_terms:
            raise UnreachableTolerance(
                f"lattice covariance tail not certified below {target:.3g}",
                value=total, error=err)
        n_terms *= 4


def _density_covariance(part, t, s, target):
    """Covariance integral against a density piece.

    Even densities use the half-line cosine decomposition; exact power-law
    densities additionally get closed-form / cosine-weighted tails, other
    integrable tails go through plain adaptive quadrature.
    """
    bracket = _real_pair_bracket(t, s)
    probe = np.array([0.3, 1.1, 2.7, 5.3])
    inside = probe[(probe > max(part.lo, 0)) & (probe < part.hi)]
    sym_support = np.isclose(part.lo, -part.hi) or \
        (math.isinf(part.lo) and math.isinf(part.hi))
    even = sym_support and len(inside) and bool(np.allclose(
        part.density(inside), part.density(-inside), rtol=1e-10, atol=1e-300))

    if not even:
        def f(u):
            return bracket(u)
        sing = sorted([pt for pt, _ in part.singularities
                       if part.lo < pt < part.hi] + [0.0])
        cuts = [part.lo] + [c for c in sing if part.lo < c < part.hi] + [part.hi]
        total, err = 0.0, 0.0
        for a, b in zip(cuts[:-1], cuts[1:]):
            v, e = _sciint.quad(lambda u: float(part.density(u) * f(u)), a, b,
                                limit=400, epsabs=target / 4, epsrel=1e-11)
            total += v
            err += e
        return total, err

    a_pow = None
    if part.expr is not None and part.expr.asymptotics.monomial \
            and part.expr.asymptotics.gauss == 0 \
            and part.expr.asymptotics.expo == 0 and math.isinf(part.hi):
        a_pow = part.expr.asymptotics.power
        c_pow = part.coeff * part.expr.asymptotics.coeff

    u_cut = min(part.hi, 40.0)
    sing = sorted({pt for pt, _ in part.singularities if 0 < pt < u_cut})
    cuts = [0.0] + sing + [u_cut]
    core, err = 0.0, 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        v, e = _sciint.quad(lambda u: float(part.density(u) * bracket(u)), a, b,
                            limit=400, epsabs=target / 8, epsrel=1e-11)
        core += v
        err += e

    tail = 0.0
    if math.isinf(part.hi):
        if a_pow is not None and a_pow - 2 < -1:
            # m(u) = c |u|^a exactly: integrate c u^(a-2) cosines beyond u_cut
            def cos_tail(theta):
                if theta == 0.0:
                    return u_cut ** (a_pow - 1.0) / (1.0 - a_pow), 0.0
                return _sciint.quad(lambda u: u ** (a_pow - 2.0), u_cut, np.inf,
                                    weight="cos", wvar=abs(theta), limit=400,
                                    epsabs=target / 8, epsrel=1e-11)
            for coef, theta in ((1.0, 0.0), (1.0, t - s), (-1.0, t), (-1.0, s)):
                v, e = cos_tail(theta)
                tail += coef * c_pow * v
                err += e
        else:
            v, e = _sciint.quad(lambda u: float(part.density(u) * bracket(u)),
                                u_cut, np.inf, limit=400,
                                epsabs=target / 8, epsrel=1e-11)
            tail += v
            err += e
    return 2.0 * (core + tail), 2.0 * err


def covariance_with_error(sigma: SpectralMeasure, t: float, s: float,
                          rtol=1e-8):
    """r(t, s) with its certified error bound."""
    if t == 0.0 or s == 0.0:
        return 0.0, 0.0
    pc = sigma.pieces()
    # coarse scale for tolerance allocation: r(t,t)^.5 r(s,s)^.5 ~ moment * |ts|
    scale = max(abs(t) * abs(s), 1.0)
    target = rtol * scale
    total, err = 0.0, 0.0
    if pc.atoms:
        xt, xs = IncrementKernel(t), IncrementKernel(s)
        locs = np.array([a for a, _ in pc.atoms])
        ws = np.array([w for _, w in pc.atoms])
        total += float(np.sum(ws * np.real(xt.fourier(locs)
                                           * np.conj(xs.fourier(locs)))))
    for lat in pc.lattices:
        v, e = _lattice_covariance(lat, t, s, target)
        total += v
        err += e
    for den in pc.densities:
        v, e = _density_covariance(den, t, s, target)
        total += v
        err += e
    if pc.ifs:
        bracket = _real_pair_bracket(t, s)
        from .measure import _integrate_ifs
        for part in pc.ifs:
            v, e, _ = _integrate_ifs(part, bracket, target, 2 ** 22)
            total += float(np.real(v))
            err += e
    allowance = max(rtol * max(abs(total), 1e-6), 1e-12)
    if err > allowance and err > target:
        raise UnreachableTolerance(
            f"covariance error {err:.3g} above allowance {allowance:.3g}",
            value=total, error=err)
    return total, err


def pointwise_covariance(sigma: SpectralMeasure, t: float, s: float,
                         rtol=1e-8) -> float:
    """r(t, s) = Re int xi_t conj(xi_s) dsigma (requires growth order <= 1)."""
    cert = certify_tempered(sigma)
    if not cert.in_class or cert.p > 1:
        raise Unsupported(
            "pointwise covariance needs a measure with finite first-order "
            f"moment (certificate: {cert})")
    return covariance_with_error(sigma, t, s, rtol=rtol)[0]


def gram_matrix(sigma: SpectralMeasure, inputs, rtol=1e-8) -> np.ndarray:
    """Hermitian Gram matrix of test functions / increment kernels.

    Increment-kernel pairs go through the covariance path; test-function
    pairs through the hermitian form.  The result is PSD up to integration
    error (checked by callers against -1e-9 * trace).
    """
    k = len(inputs)
    g = np.zeros((k, k), dtype=complex)
    for i in range(k):
        for j in range(i, k):
            a, b = inputs[i], inputs[j]
            if isinstance(a, IncrementKernel) and isinstance(b, IncrementKernel):
                val = covariance_with_error(sigma, a.t, b.t, rtol=rtol)[0]
            else:
                val = hermitian_form(a, b, sigma, rtol=rtol).value
            g[i, j] = val
            g[j, i] = np.conj(val)
    if np.abs(g.imag).max() <= 1e-9 * max(np.abs(g.real).max(), 1e-300):
        return g.real
    return g


def min_relative_eigenvalue(g: np.ndarray) -> float:
    """Smallest eigenvalue relative to the trace (PSD check helper)."""
    ev = np.linalg.eigvalsh(np.asarray(g))
    tr = float(np.trace(np.asarray(g)).real)
    return float(ev[0]) / max(tr, 1e-300)


# ---------------------------------------------------------------------------
# normal-field grids

@dataclass
class NormalFieldGrid:
    """Frequency-bin discretization of the driving Gaussian random measure."""

    edges: np.ndarray
    variances: np.ndarray        # int_bin dsigma/(1+u^2)^p
    sigma_mass: np.ndarray
    representatives: np.ndarray  # sigma-mass centroid per bin
    p: int
    truncation_mass: float
    rule: str
    measure_key: str

    @property
    def n_bins(self) -> int:
        return len(self.variances)

    @property
    def u_max(self) -> float:
        return float(self.edges[-1])

    def is_symmetric(self) -> bool:
        return bool(np.allclose(self.edges, -self.edges[::-1], atol=1e-12))

    def to_config(self):
        return {"edges": [float(x) for x in self.edges],
                "variances": [float(x) for x in self.variances],
                "representatives": [float(x) for x in self.representatives],
                "p": self.p, "truncation_mass": self.truncation_mass,
                "rule": self.rule}


def symmetric_edges(u_max: float, bins: int) -> np.ndarray:
    """Equal-width edges on [-u_max, u_max], exactly mirrored about zero."""
    if bins % 2 == 0:
        half = np.linspace(0.0, u_max, bins // 2 + 1)
        return np.concatenate([-half[:0:-1], half])
    half = np.linspace(u_max / bins, u_max, (bins + 1) // 2)
    return np.concatenate([-half[::-1], half])


def _equal_mass_edges(sigma, u_max, bins, p):
    pc = sigma.pieces()
    if pc.atoms or pc.lattices or pc.ifs:
        raise Unsupported("equal-mass binning is defined for density "
                          "measures only (atoms are indivisible)")

    def vdensity(u):
        total = 0.0
        for den in pc.densities:
            if den.lo <= u <= den.hi:
                total += float(den.density(u)) / (1 + u * u) ** p
        return total

    base = np.linspace(-u_max, u_max, 2049)
    for den in pc.densities:
        for pt, _ in den.singularities:
            if -u_max < pt < u_max:
                base = np.sort(np.append(base, [pt]))
    cell = np.zeros(len(base) - 1)
    for i, (a, b) in enumerate(zip(base[:-1], base[1:])):
        cell[i], _ = _sciint.quad(vdensity, a, b, limit=60)
    cum = np.concatenate([[0.0], np.cumsum(cell)])
    total = cum[-1]
    if total <= 0:
        raise Unsupported("no sigma-mass inside the grid window")
    targets = total * np.arange(1, bins) / bins
    edges = [-u_max]
    from scipy.optimize import brentq
    for tau in targets:
        i = int(np.searchsorted(cum, tau, side="right") - 1)
        i = min(max(i, 0), len(cell) - 1)
        lo, hi = base[i], base[i + 1]

        def g(x):
            v, _ = _sciint.quad(vdensity, lo, x, limit=60)
            return cum[i] + v - tau
        edges.append(brentq(g, lo, hi, xtol=1e-13))
    edges.append(u_max)
    return np.asarray(edges)


def build_grid(sigma: SpectralMeasure, u_max: float, bins: int,
               rule: str = "equal_width", p: int = 1) -> NormalFieldGrid:
    """Cut [-u_max, u_max] into bins and charge each with its grid variance.

    ``rule`` is "equal_width" or "equal_mass" (densities only); truncation
    mass is the weighted measure outside the window, kept as an error budget.
    """
    if bins < 2:
        raise ConfigError("a grid needs at least 2 bins")
    if u_max <= 0:
        raise ConfigError("u_max must be positive")
    if rule == "equal_width":
        edges = symmetric_edges(u_max, bins)
    elif rule == "equal_mass":
        edges = _equal_mass_edges(sigma, u_max, bins, p)
    else:
        raise ConfigError(f"unknown binning rule {rule!r}")
    var, mass, cent = sigma.bin_profile(edges, p)
    total = moment_integral(sigma, p, rtol=1e-9)
    truncation = max(float(total - var.sum()), 0.0)
    return NormalFieldGrid(edges, var, mass, cent, p, truncation, rule,
                           sigma.config_key())


def grid_covariance(grid: NormalFieldGrid, t: float, s: float) -> float:
    """Covariance reconstructed from the grid alone (refinement diagnostics)."""
    u = grid.representatives
    xt, xs = IncrementKernel(t), IncrementKernel(s)
    w = (1 + u ** 2) ** grid.p * grid.variances
    return float(np.sum(w * np.real(xt.fourier(u) * np.conj(xs.fourier(u)))))


# ---------------------------------------------------------------------------
# sampling

@dataclass
class PathEnsemble:
    times: np.ndarray
    values: np.ndarray           # (n_paths, n_times)
    seed: int
    grid: NormalFieldGrid
    method: str = "spectral_synthesis"
    symmetrized: bool = False

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]


def _positive_side(grid: NormalFieldGrid):
    """Positive-side bin data for the mirrored-pair synthesis.

    Returns (representatives, effective variances).  Mirrored bins share one
    complex coefficient, so each positive bin carries the pair average; a
    middle bin straddling zero is its own mirror and carries half its mass.
    """
    if not grid.is_symmetric():
        raise InconsistentGrid("synthesis needs a grid symmetric about 0")
    b = grid.n_bins
    v = np.asarray(grid.variances, dtype=float)
    v_pair = 0.5 * (v + v[::-1])
    sym = bool(np.allclose(v, v[::-1], rtol=1e-9, atol=1e-15))
    reps = np.asarray(grid.representatives, dtype=float)
    if b % 2 == 0:
        idx = np.arange(b // 2, b)
        u = np.abs(reps[idx])
        veff = v_pair[idx]
    else:
        mid = b // 2
        idx = np.arange(mid, b)
        u = np.abs(reps[idx])
        u[0] = 0.0
        veff = v_pair[idx].copy()
        veff[0] *= 0.5
    return u, veff, sym


def _synthesis_matrix(grid: NormalFieldGrid, kernels):
    """Rows of per-bin weights for [g-block, h-block] normal draws."""
    u, veff, sym = _positive_side(grid)
    scale = math.sqrt(2.0) * np.sqrt((1 + u ** 2) ** grid.p) * np.sqrt(veff)
    rows_g = []
    rows_h = []
    for k in kernels:
        amp = k.fourier(u)
        rows_g.append(scale * np.real(amp))
        rows_h.append(-scale * np.imag(amp))
    return np.asarray(rows_g), np.asarray(rows_h), sym


def _path_normals(seed: int, path_index: int, count: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(key=[seed & (2 ** 64 - 1),
                                                    path_index]))
    return rng.standard_normal(count)


def sample_paths(sigma: SpectralMeasure, grid: NormalFieldGrid, times,
                 n_paths: int, seed: int, workers: int = 1) -> PathEnsemble:
    """Draw a reproducible ensemble of process values on the time grid.

    Identical (seed, grid, times) give bitwise-identical ensembles for any
    worker count: each path derives its normals from a Philox stream keyed
    by (seed, path index).
    """
    cert = certify_tempered(sigma)
    if not cert.in_class or cert.p > 1:
        raise Unsupported(
            "spectral synthesis is defined for measures with finite "
            f"first-order moment; certificate: {cert}")
    if grid.p != 1:
        raise InconsistentGrid("synthesis requires a grid built with p=1")
    if grid.measure_key != sigma.config_key():
        raise InconsistentGrid("grid was built for a different measure")
    times = np.asarray(times, dtype=float)
    kernels = [IncrementKernel(float(t)) for t in times]
    rows_g, rows_h, sym = _synthesis_matrix(grid, kernels)
    weight = np.vstack([rows_g.T, rows_h.T])       # (2K, T)
    n_normals = weight.shape[0]
    values = np.empty((n_paths, len(times)))
    chunk = max(1, min(8192, n_paths))

    def fill(start):
        stop = min(start + chunk, n_paths)
        z = np.empty((stop - start, n_normals))
        for i in range(start, stop):
            z[i - start] = _path_normals(seed, i, n_normals)
        values[start:stop] = z @ weight
        return stop

    starts = range(0, n_paths, chunk)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, starts))
    else:
        for start in starts:
            fill(start)
    return PathEnsemble(times, values, int(seed), grid,
                        symmetrized=not sym)


# ---------------------------------------------------------------------------
# characteristic functional

@dataclass
class CharCheckResult:
    mc_estimate: complex
    target: float
    z_score: float
    std_error: float
    n_samples: int
    grid_variance: float
    form_value: float


def default_grid_for(sigma: SpectralMeasure, psi: TestFunction,
                     bins: int = 96) -> NormalFieldGrid:
    """Equal-width grid wide enough that the transform's mass is covered."""
    dec = psi.fourier_decay()
    u_max = 8.0
    if dec is not None:
        peak = float(np.abs(psi.fourier(np.linspace(-8, 8, 257))).max())
        while u_max < 1e5 and dec.envelope(u_max) > 1e-9 * max(peak, 1e-300):
            u_max *= 1.5
    return build_grid(sigma, u_max=u_max, bins=bins, rule="equal_width", p=1)


def char_functional_check(sigma: SpectralMeasure, psi: TestFunction,
                          n_samples: int, seed: int,
                          grid: NormalFieldGrid | None = None) -> CharCheckResult:
    """Monte Carlo check of E[exp(i Y(psi))] = exp(-q(psi)/2).

    Y is synthesized through the grid pairing
    sum_j sqrt(1+u_j^2) psi-hat weights Z_j; the z-score compares the real
    part of the sample mean of exp(iY) to the quadrature target using the
    known sampling variance of cos(Y).
    """
    if not psi.real:
        raise Unsupported("the characteristic-functional check needs a "
                          "real-valued test function")
    if grid is None:
        grid = default_grid_for(sigma, psi)
    if psi.is_zero():
        return CharCheckResult(1.0 + 0.0j, 1.0, 0.0, 0.0, n_samples, 0.0, 0.0)
    rows_g, rows_h, _ = _synthesis_matrix(grid, [psi])
    w = np.concatenate([rows_g[0], rows_h[0]])
    q_grid = float(np.dot(w, w))
    q_true = quadratic_form(psi, sigma).real
    target = math.exp(-0.5 * q_true)
    acc = 0.0 + 0.0j
    rng = np.random.Generator(np.random.Philox(key=[int(seed) & (2 ** 64 - 1),
                                                    2 ** 63]))
    remaining = int(n_samples)
    chunk = 65536
    while remaining > 0:
        m = min(chunk, remaining)
        y = rng.standard_normal((m, len(w))) @ w
        acc += np.exp(1j * y).sum()
        remaining -= m
    est = acc / n_samples
    var_cos = 0.5 * (1.0 + math.exp(-2.0 * q_grid)) - math.exp(-q_grid)
    se = math.sqrt(max(var_cos, 1e-300) / n_samples)
    z = (est.real - target) / se if se > 0 else 0.0
    return CharCheckResult(complex(est), target, float(z), se, int(n_samples),
                           q_grid, q_true)


def rkhs_kernel(sigma: SpectralMeasure, phi: TestFunction,
                psi: TestFunction) -> float:
    """exp(-q(phi - psi)/2): the positive-definite kernel of the process law."""
    if not (phi.real and psi.real):
        raise Unsupported("the kernel is defined on real test functions")
    q = quadratic_form(phi - psi, sigma).real
    return math.exp(-0.5 * q)


# ---------------------------------------------------------------------------
# stationarity

@dataclass
class LagReport:
    lag: float
    pair_count: int
    variances: list
    std_errors: list
    mean_variance: float
    spread: float
    max_abs_z: float


@dataclass
class StationarityReport:
    lags: list
    max_abs_z: float
    z_threshold: float
    passed: bool


def stationarity_check(ensemble: PathEnsemble, lag: float | None = None,
                       z_threshold: float = 4.0) -> StationarityReport:
    """Empirically verify that Var(X(t) - X(s)) depends only on t - s.

    Groups time pairs by lag on the arithmetic grid and compares each pair's
    increment variance to the group mean in units of the Monte Carlo standard
    error of a variance estimate.
    """
    times = np.asarray(ensemble.times, dtype=float)
    if len(times) < 2:
        raise InsufficientPairs("need at least two time points")
    steps = np.diff(times)
    step = steps.min()
    if step <= 0 or not np.allclose(steps / step,
                                    np.round(steps / step), atol=1e-9):
        raise ConfigError("ensemble times must form an arithmetic grid")
    ks = np.round((times - times[0]) / step).astype(int)
    index_of = {k: i for i, k in enumerate(ks)}
    n = ensemble.values.shape[0]
    if lag is not None:
        lag_steps = [int(round(lag / step))]
        if not math.isclose(lag_steps[0] * step, lag, rel_tol=1e-9,
                            abs_tol=1e-12):
            raise InsufficientPairs(f"lag {lag} is not a multiple of the grid")
    else:
        lag_steps = sorted({b - a for a in ks for b in ks if b > a})
    reports = []
    overall = 0.0
    for m in lag_steps:
        pairs = [(index_of[k], index_of[k + m]) for k in ks
                 if k + m in index_of]
        if lag is not None and len(pairs) < 2:
            raise InsufficientPairs(
                f"only {len(pairs)} pair(s) at lag {m * step}")
        if len(pairs) < 2:
            continue
        variances = []
        errors = []
        for i, j in pairs:
            incr = ensemble.values[:, j] - ensemble.values[:, i]
            v = float(np.var(incr, ddof=1))
            variances.append(v)
            errors.append(v * math.sqrt(2.0 / (n - 1)))
        mean_v = float(np.mean(variances))
        zs = [abs(v - mean_v) / max(e, 1e-300)
              for v, e in zip(variances, errors)]
        max_z = max(zs) if len(pairs) > 1 else 0.0
        overall = max(overall, max_z)
        reports.append(LagReport(m * step, len(pairs), variances, errors,
                                 mean_v, max(variances) - min(variances),
                                 max_z))
    return StationarityReport(reports, overall, z_threshold,
                              overall <= z_threshold)
