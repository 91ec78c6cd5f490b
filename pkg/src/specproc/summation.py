"""Tail machinery for infinite lattice sums.

All routines return ``(tail_value, error_bound)`` for the one-sided series
``sum_{n >= start} g(n)`` (or a pure bound with ``tail_value == 0``).  They
are deliberately conservative: the bounds are what the measure layer reports
as certified integration error.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.special import zeta


def euler_maclaurin_tail(g, start: float):
    """Tail of ``sum_{n>=start} g(n)`` for smooth, eventually monotone g.

    Uses the Euler-Maclaurin expansion
    ``integral + g/2 - g'/12 + g'''/720`` with centered finite-difference
    derivatives.  The reported error is the magnitude of the first omitted
    correction term (valid for completely monotone summands such as the
    ``(1+u^2)^(-p)`` moment weights) plus the quadrature error.
    """
    val, quad_err = integrate.quad(g, start, np.inf, limit=200,
                                   epsabs=1e-14, epsrel=1e-12)
    h = 0.5
    pts = g(np.asarray([start - 2 * h, start - h, start, start + h, start + 2 * h]))
    g0 = float(pts[2])
    d1 = float((pts[3] - pts[1]) / (2 * h))
    d3 = float((pts[4] - 2 * pts[3] + 2 * pts[1] - pts[0]) / (2 * h ** 3))
    # Richardson-correct the h^2 truncation of the first derivative
    d1 -= d3 * h * h / 6.0
    tail = val + 0.5 * g0 - d1 / 12.0 + d3 / 720.0
    # g^(5) estimated from the decay ratio of successive derivatives; it
    # controls both the first omitted expansion term and the residual
    # finite-difference truncation
    g5_est = abs(d3) * (abs(d3) / abs(d1)) if d1 else abs(d3)
    fd_err = g5_est * h ** 4 / 30.0 / 12.0 + abs(d3) * h * h / 4.0 / 720.0
    omitted = g5_est / 30240.0
    return tail, omitted + fd_err + quad_err + 1e-16 * abs(tail)


def hurwitz_tail(coeff: float, s: float, start: int):
    """Exact ``coeff * sum_{n>=start} n^-s`` via the Hurwitz zeta function."""
    if s <= 1:
        return math.inf, math.inf
    v = coeff * float(zeta(s, start))
    return v, 1e-15 * abs(v)


def dirichlet_tail_bound(a_first: float, theta: float):
    """Bound for ``|sum_{n>=N} a_n e^(i theta n)|`` with a_n decreasing to 0.

    ``a_first`` is the first omitted magnitude a_N.  Requires theta not
    congruent to 0 mod 2*pi; by the Dirichlet test the partial exponential
    sums are bounded by 1/|sin(theta/2)|.
    """
    s = abs(math.sin(theta / 2.0))
    if s == 0:
        return math.inf
    return 2.0 * a_first / s


def gaussian_lattice_tail_bound(coeff: float, rate: float, spacing: float,
                                first_index: int, growth_power: float = 0.0,
                                growth_coeff: float = 1.0):
    """Bound ``sum_{n>=first} growth_coeff*n^g * coeff*exp(-rate*(spacing*n)^2)``.

    Valid for rate > 0.  Uses the geometric comparison
    ``term(n+1)/term(n) <= ((n+1)/n)^g * exp(-rate*spacing^2*(2n+1))``.
    """
    n0 = max(first_index, 1)
    t0 = growth_coeff * n0 ** growth_power * coeff * math.exp(-rate * (spacing * n0) ** 2)
    ratio = ((n0 + 1) / n0) ** max(growth_power, 0.0) * math.exp(-rate * spacing ** 2 * (2 * n0 + 1))
    if ratio >= 1.0:
        # push the start until the ratio contracts
        total = 0.0
        n = n0
        while ratio >= 1.0 and n < n0 + 10000:
            total += growth_coeff * n ** growth_power * coeff * math.exp(-rate * (spacing * n) ** 2)
            n += 1
            ratio = ((n + 1) / n) ** max(growth_power, 0.0) * math.exp(-rate * spacing ** 2 * (2 * n + 1))
        t0 = growth_coeff * n ** growth_power * coeff * math.exp(-rate * (spacing * n) ** 2)
        return total + t0 / (1.0 - ratio)
    return t0 / (1.0 - ratio)


def power_lattice_tail_bound(coeff: float, exponent: float, spacing: float,
                             first_index: int, growth_power: float = 0.0,
                             growth_coeff: float = 1.0):
    """Bound ``sum_{n>=first} growth_coeff*n^g * coeff*(spacing*n)^-alpha``.

    Exact Hurwitz-zeta evaluation of the dominating series; requires
    ``alpha - g > 1``.
    """
    s = exponent - growth_power
    if s <= 1:
        return math.inf
    v, _ = hurwitz_tail(growth_coeff * coeff * spacing ** (-exponent), s,
                        max(first_index, 1))
    return v
