"""Decay certificates for frequency-side integrands.

A certificate is an envelope statement ``|f(u)| <= bound(u)`` valid for
``|u| >= cutoff``.  The measure layer combines them with its own tail
structure to produce certified truncation bounds for lattice sums and
quadrature tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PowerDecay:
    """|f(u)| <= coeff * |u|**(-exponent) for |u| >= cutoff."""

    coeff: float
    exponent: float
    cutoff: float = 1.0

    def envelope(self, u):
        return self.coeff * abs(u) ** (-self.exponent)


@dataclass(frozen=True)
class GaussianDecay:
    """|f(u)| <= coeff * exp(-rate * u**2) for |u| >= cutoff."""

    coeff: float
    rate: float
    cutoff: float = 0.0

    def envelope(self, u):
        return self.coeff * math.exp(-self.rate * u * u)


@dataclass(frozen=True)
class CompactSupport:
    """f vanishes identically for |u| > radius."""

    radius: float

    def envelope(self, u):
        return 0.0 if abs(u) > self.radius else math.inf


Decay = PowerDecay | GaussianDecay | CompactSupport


def product(a: Decay | None, b: Decay | None) -> Decay | None:
    """Certificate for a pointwise product from its factors' certificates."""
    if a is None or b is None:
        return None
    if isinstance(a, CompactSupport) or isinstance(b, CompactSupport):
        radii = [c.radius for c in (a, b) if isinstance(c, CompactSupport)]
        return CompactSupport(min(radii))
    if isinstance(a, GaussianDecay) and isinstance(b, GaussianDecay):
        return GaussianDecay(a.coeff * b.coeff, a.rate + b.rate,
                             max(a.cutoff, b.cutoff))
    if isinstance(a, GaussianDecay) or isinstance(b, GaussianDecay):
        g = a if isinstance(a, GaussianDecay) else b
        p = b if isinstance(a, GaussianDecay) else a
        cut = max(g.cutoff, p.cutoff, 1.0)
        # |u|^-alpha <= cut^-alpha for |u| >= cut when alpha >= 0
        scale = p.coeff * cut ** (-p.exponent) if p.exponent >= 0 else None
        if scale is None:
            return None
        return GaussianDecay(g.coeff * scale, g.rate, cut)
    return PowerDecay(a.coeff * b.coeff, a.exponent + b.exponent,
                      max(a.cutoff, b.cutoff))


def add(a: Decay | None, b: Decay | None) -> Decay | None:
    """Certificate for a sum: the slower envelope with summed coefficients."""
    if a is None or b is None:
        return None
    if isinstance(a, CompactSupport) and isinstance(b, CompactSupport):
        return CompactSupport(max(a.radius, b.radius))
    if isinstance(a, CompactSupport):
        return b
    if isinstance(b, CompactSupport):
        return a
    if isinstance(a, GaussianDecay) and isinstance(b, GaussianDecay):
        return GaussianDecay(a.coeff + b.coeff, min(a.rate, b.rate),
                             max(a.cutoff, b.cutoff))
    if isinstance(a, PowerDecay) and isinstance(b, PowerDecay):
        return PowerDecay(a.coeff + b.coeff, min(a.exponent, b.exponent),
                          max(a.cutoff, b.cutoff))
    # mixed gaussian/power: power envelope wins at infinity
    p = a if isinstance(a, PowerDecay) else b
    g = b if isinstance(a, PowerDecay) else a
    cut = max(p.cutoff, g.cutoff, 1.0)
    if g.rate <= 0:
        return None
    # bound the gaussian term by a multiple of the power term beyond cut
    extra = g.coeff * math.exp(-g.rate * cut * cut) * cut ** p.exponent
    return PowerDecay(p.coeff + extra, p.exponent, cut)


def scale(a: Decay | None, factor: float) -> Decay | None:
    if a is None:
        return None
    factor = abs(factor)
    if isinstance(a, CompactSupport):
        return a
    if isinstance(a, GaussianDecay):
        return GaussianDecay(a.coeff * factor, a.rate, a.cutoff)
    return PowerDecay(a.coeff * factor, a.exponent, a.cutoff)
