"""Test functions with closed-form Fourier transforms.

The Fourier convention throughout the package is

    hat(psi)(u) = integral exp(-i u x) psi(x) dx,

so Parseval reads ``int |hat(psi)|^2 du = 2 pi int |psi|^2 dx`` and a time
shift by t multiplies the transform by exp(-i u t).

A TestFunction is a finite complex combination of three kinds of atoms:
Gaussian packets (center, width, modulation), shifted Hermite functions
(Fourier eigenfunctions up to the convention factor sqrt(2 pi) (-i)^m), and
frequency-side windows given by an expression for the transform itself.
The combination supports translation, scalar algebra, certified frequency
decay and (for the first two kinds) certified time decay for periodization.

IncrementKernel is the frequency kernel (exp(i t u) - 1)/u used to extend
the processes from Schwartz indexing to pointwise time indexing; it switches
to a Taylor branch near u = 0 to avoid cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate as _sciint

from . import decay as _decay
from .decay import CompactSupport, GaussianDecay, PowerDecay
from .errors import ConfigError, UnreachableTolerance, Unsupported
from .expressions import Expression

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def hermite_values(index: int, x):
    """Orthonormal Hermite functions h_m(x) by the stable three-term recurrence."""
    x = np.asarray(x, dtype=float)
    h_prev = np.pi ** (-0.25) * np.exp(-0.5 * x * x)
    if index == 0:
        return h_prev
    h = math.sqrt(2.0) * x * h_prev
    for m in range(2, index + 1):
        h, h_prev = x * math.sqrt(2.0 / m) * h - math.sqrt((m - 1) / m) * h_prev, h
    return h


@lru_cache(maxsize=None)
def _hermite_envelope_coeff(index: int) -> float:
    """Numeric A_m with |h_m(y)| <= A_m exp(-y^2/4) everywhere (x1.2 margin)."""
    y = np.linspace(0.0, math.sqrt(4.0 * index + 8.0) + 6.0, 4001)
    ratio = np.abs(hermite_values(index, y)) * np.exp(0.25 * y * y)
    return 1.2 * float(ratio.max())


@dataclass(frozen=True)
class GaussianPacket:
    center: float = 0.0
    width: float = 1.0
    modulation: float = 0.0

    def __post_init__(self):
        if self.width <= 0:
            raise ConfigError("Gaussian packet width must be positive")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        envelope = np.exp(-0.5 * ((x - self.center) / self.width) ** 2)
        if self.modulation == 0.0:
            return envelope.astype(complex)
        return envelope * np.exp(1j * self.modulation * x)

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        q = u - self.modulation
        amp = self.width * _SQRT_2PI
        return amp * np.exp(-0.5 * (self.width * q) ** 2) * np.exp(-1j * self.center * q)

    def fourier_decay(self):
        amp = self.width * _SQRT_2PI
        if self.modulation == 0.0:
            return GaussianDecay(amp, 0.5 * self.width ** 2, 0.0)
        return GaussianDecay(amp, 0.125 * self.width ** 2,
                             2.0 * abs(self.modulation))

    def time_envelope(self):
        w = self.width
        c = self.center
        return lambda y: np.exp(-0.5 * ((np.asarray(y, float) - c) / w) ** 2)

    def translated(self, t):
        phase = np.exp(-1j * self.modulation * t) if self.modulation else 1.0
        return phase, GaussianPacket(self.center + t, self.width, self.modulation)

    def is_real(self):
        return self.modulation == 0.0

    def to_config(self):
        return {"form": "gaussian_packet", "center": self.center,
                "width": self.width, "modulation": self.modulation}


@dataclass(frozen=True)
class HermiteFunction:
    index: int
    shift: float = 0.0

    def __post_init__(self):
        if self.index < 0:
            raise ConfigError("Hermite index must be nonnegative")

    def value(self, x):
        return hermite_values(self.index, np.asarray(x, float) - self.shift).astype(complex)

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        base = _SQRT_2PI * (-1j) ** self.index * hermite_values(self.index, u)
        if self.shift == 0.0:
            return base
        return base * np.exp(-1j * u * self.shift)

    def fourier_decay(self):
        return GaussianDecay(_SQRT_2PI * _hermite_envelope_coeff(self.index),
                             0.25, 0.0)

    def time_envelope(self):
        a = _hermite_envelope_coeff(self.index)
        s = self.shift
        return lambda y: a * np.exp(-0.25 * (np.asarray(y, float) - s) ** 2)

    def translated(self, t):
        return 1.0, HermiteFunction(self.index, self.shift + t)

    def is_real(self):
        return True

    def to_config(self):
        return {"form": "hermite", "index": self.index, "shift": self.shift}


@dataclass(frozen=True)
class FourierWindow:
    """Atom specified by its transform: hat(u) = expr(u) on a support window."""

    expr: Expression
    lo: float = -math.inf
    hi: float = math.inf
    phase_shift: float = 0.0

    def value(self, x):
        raise Unsupported("frequency-side windows have no closed time-domain form")

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        out = self.expr(u).astype(complex)
        out[(u < self.lo) | (u > self.hi)] = 0.0
        if self.phase_shift:
            out = out * np.exp(-1j * u * self.phase_shift)
        return out

    def fourier_decay(self):
        if math.isfinite(self.lo) and math.isfinite(self.hi):
            return CompactSupport(max(abs(self.lo), abs(self.hi)))
        a = self.expr.asymptotics
        if a.gauss < 0:
            return GaussianDecay(2.0 * a.coeff, -a.gauss, 1.0)
        if a.polynomial_bounded and a.power < 0:
            return PowerDecay(2.0 * a.coeff, -a.power, 1.0)
        return None

    def time_envelope(self):
        return None

    def translated(self, t):
        return 1.0, FourierWindow(self.expr, self.lo, self.hi,
                                  self.phase_shift + t)

    def is_real(self):
        # real iff hat is Hermitian; require an even real window
        return math.isfinite(self.lo) and self.lo == -self.hi

    def to_config(self):
        return {"form": "fourier_side", "expr": self.expr.source,
                "support": [self.lo, self.hi], "phase_shift": self.phase_shift}


class TestFunction:
    """Finite complex combination of packet/Hermite/window atoms."""

    def __init__(self, terms, real=None):
        cleaned = []
        for coeff, atom in terms:
            coeff = complex(coeff)
            if coeff != 0:
                cleaned.append((coeff, atom))
        self.terms = tuple(cleaned)
        self.real = self._check_real() if real is None else bool(real)

    # -- constructors --------------------------------------------------------

    @classmethod
    def gaussian_packet(cls, center=0.0, width=1.0, modulation=0.0, coeff=1.0):
        return cls([(coeff, GaussianPacket(center, width, modulation))])

    @classmethod
    def hermite(cls, coefficients):
        terms = [(c, HermiteFunction(m)) for m, c in enumerate(coefficients)]
        return cls(terms)

    @classmethod
    def fourier_side(cls, expr, support=(-math.inf, math.inf)):
        if isinstance(expr, str):
            expr = Expression(expr)
        return cls([(1.0, FourierWindow(expr, float(support[0]),
                                        float(support[1])))])

    @classmethod
    def zero(cls):
        return cls([])

    # -- structure -----------------------------------------------------------

    def _check_real(self) -> bool:
        if all(np.isreal(c) and atom.is_real() and
               not isinstance(atom, FourierWindow)
               for c, atom in self.terms):
            return True
        # numeric Hermitian-symmetry probe of the transform
        probes = np.array([0.13, 0.71, 1.9, 3.3, 5.7, 8.9, 0.02])
        plus = self.fourier(probes)
        minus = self.fourier(-probes)
        scale = float(np.abs(plus).max()) if len(self.terms) else 0.0
        return bool(np.allclose(minus, np.conj(plus), atol=1e-9 * max(scale, 1e-9)))

    def is_zero(self):
        return not self.terms

    # -- algebra ---------------------------------------------------------------

    def __add__(self, other):
        return TestFunction(self.terms + other.terms)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar):
        return TestFunction([(scalar * c, a) for c, a in self.terms])

    def __mul__(self, scalar):
        return self.__rmul__(scalar)

    # -- analysis ---------------------------------------------------------------

    def value(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=complex)
        for c, atom in self.terms:
            out += c * atom.value(x)
        return out

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape, dtype=complex)
        for c, atom in self.terms:
            out += c * atom.fourier(u)
        return out

    def fourier_decay(self):
        total = CompactSupport(0.0) if not self.terms else None
        for c, atom in self.terms:
            d = _decay.scale(atom.fourier_decay(), abs(c))
            total = d if total is None else _decay.add(total, d)
            if total is None:
                return None
        return total

    def translated(self, t):
        terms = []
        for c, atom in self.terms:
            phase, moved = atom.translated(t)
            terms.append((c * phase, moved))
        return TestFunction(terms, real=self.real if t == 0 else None)

    def l2_norm_squared(self) -> float:
        """||psi||^2 in L2(dx), evaluated as (1/2pi) * int |hat|^2 du."""
        if not self.terms:
            return 0.0
        val, _ = _sciint.quad(lambda u: abs(complex(self.fourier(np.asarray([u]))[0])) ** 2,
                              -np.inf, np.inf, limit=400, epsabs=1e-13,
                              epsrel=1e-12)
        return val / (2.0 * math.pi)

    def to_config(self):
        return {"form": "combination", "real": self.real,
                "terms": [[[c.real, c.imag], atom.to_config()]
                          for c, atom in self.terms]}

    def __repr__(self):
        return f"TestFunction({len(self.terms)} terms, real={self.real})"


# ---------------------------------------------------------------------------
# operations

def fourier_transform(psi: TestFunction):
    """The transform as a vectorized callable of frequency."""
    return psi.fourier


def translate(psi: TestFunction, t: float) -> TestFunction:
    """Time shift psi(. - t); the transform picks up exp(-i u t) exactly."""
    return psi.translated(t)


def periodize(psi: TestFunction, x: float, n_terms: int):
    """sum_{|n| <= n_terms} psi(x + 2 pi n), with a certified tail bound.

    Raises UnreachableTolerance when an atom carries no time-domain decay
    certificate (frequency-side windows).
    """
    value, _ = periodize_with_bound(psi, x, n_terms)
    return value


def periodize_with_bound(psi: TestFunction, x, n_terms: int):
    x = np.asarray(x, dtype=float)
    shifts = 2.0 * math.pi * np.arange(-n_terms, n_terms + 1)
    pts = x[..., None] + shifts
    total = psi.value(pts.reshape(-1)).reshape(pts.shape).sum(axis=-1)
    bound = 0.0
    for c, atom in psi.terms:
        env = atom.time_envelope()
        if env is None:
            raise UnreachableTolerance(
                "periodization needs a time-domain decay certificate")
        for sign in (+1.0, -1.0):
            y0 = x + sign * 2.0 * math.pi * (n_terms + 1)
            y1 = x + sign * 2.0 * math.pi * (n_terms + 2)
            e0 = abs(c) * np.asarray(env(y0))
            e1 = abs(c) * np.asarray(env(y1))
            ratio = np.where(e0 > 0, np.minimum(e1 / np.maximum(e0, 1e-300), 0.999),
                             0.0)
            bound += float(np.max(e0 / (1.0 - ratio)))
    if psi.real:
        return np.real(total) if total.shape else float(np.real(total)), bound
    return total if total.shape else complex(total), bound


@dataclass(frozen=True)
class IncrementKernel:
    """Frequency kernel xi_t(u) = (exp(i t u) - 1)/u, with xi_t(0) = i t."""

    t: float

    _SERIES_CUT = 1e-4

    def fourier(self, u):
        u = np.asarray(u, dtype=float)
        t = self.t
        z = t * u
        small = np.abs(z) < self._SERIES_CUT
        safe = np.where(small, 1.0, u)
        main = (np.exp(1j * np.where(small, 0.0, z)) - 1.0) / safe
        iz = 1j * z
        series = 1j * t * (1.0 + iz / 2.0 + iz * iz / 6.0 + iz * iz * iz / 24.0)
        return np.where(small, series, main)

    def fourier_decay(self):
        return PowerDecay(2.0, 1.0, 1e-12)

    def is_real(self):
        return False

    def squared_modulus(self, u):
        """|xi_t(u)|^2 = 2(1 - cos(t u))/u^2, continuous at 0 with value t^2."""
        f = self.fourier(u)
        return (f * np.conj(f)).real

    def to_config(self):
        return {"form": "increment_kernel", "t": self.t}


def load_testfn(cfg) -> TestFunction:
    """Build a test function from a JSON-style dict (or path to a JSON file)."""
    import json
    if isinstance(cfg, str):
        with open(cfg, "r", encoding="utf-8") as fh:
            cfg = json.load(fh)
    if not isinstance(cfg, dict) or "form" not in cfg:
        raise ConfigError("test-function config must be a dict with a 'form'")
    form = cfg["form"]
    if form == "gaussian_packet":
        return TestFunction.gaussian_packet(cfg.get("center", 0.0),
                                            cfg.get("width", 1.0),
                                            cfg.get("modulation", 0.0),
                                            cfg.get("coeff", 1.0))
    if form == "hermite":
        if "index" in cfg:
            return TestFunction([(1.0, HermiteFunction(cfg["index"],
                                                       cfg.get("shift", 0.0)))])
        return TestFunction.hermite(cfg["coefficients"])
    if form == "fourier_side":
        return TestFunction.fourier_side(cfg["expr"],
                                         tuple(cfg.get("support",
                                                       (-math.inf, math.inf))))
    if form == "combination":
        terms = []
        for centry, sub in cfg["terms"]:
            c = complex(centry[0], centry[1]) if isinstance(centry, (list, tuple)) \
                else complex(centry)
            sub_fn = load_testfn(sub)
            if len(sub_fn.terms) != 1:
                raise ConfigError("combination entries must be single atoms")
            terms.append((c * sub_fn.terms[0][0], sub_fn.terms[0][1]))
        return TestFunction(terms, real=cfg.get("real"))
    raise ConfigError(f"unknown test-function form {form!r}")
