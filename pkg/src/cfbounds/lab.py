"""Scalar functionals and polynomial certificates for the two-point
reduction of the difference-of-means bound.

Everything here works on the two-point sample ``(1, x)`` with weights
``(1 - q, q)`` unless stated otherwise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from cfbounds.means import ExponentPair

SMALL_EXPONENT = 1e-8
# safe under-approximation of alpha0(5/6, 1/5, -1) = ln(30/26)/ln(5)
C4_ALPHA_CONST = 0.0889


class NoCriticalPoint(ValueError):
    """Raised when ``-q(r+1)x**r + (r-2)(1-q) <= 0``, so ``x`` cannot be a
    stationary point of ``f2``."""


@dataclass(frozen=True)
class AlphaParams:
    alpha1: float
    alpha2: float

    def __post_init__(self):
        if not self.alpha1 >= 0:
            raise ValueError("alpha1 must be nonnegative")

    def alpha3(self, s: float) -> float:
        return (1 - 3 * s) / s * self.alpha1 + self.alpha2


def pow_m1_over(x: float, t: float) -> float:
    """``(x**t - 1)/t`` with the ``ln x`` limit at ``t = 0``."""
    lx = math.log(x)
    if abs(t) < SMALL_EXPONENT:
        return lx * (1 + 0.5 * t * lx)
    return math.expm1(t * lx) / t


def _nonzero_exps(exps: ExponentPair) -> None:
    if exps.r == 0 or exps.s == 0:
        raise ValueError("f1/f2 are undefined when r or s is 0")


def f1(x: float, q: float, exps: ExponentPair) -> float:
    """Derivative of ``F`` in the top value, divided by its weight, for the
    two-point sample."""
    _nonzero_exps(exps)
    r, s = exps.r, exps.s
    return ((q * x**r + 1 - q) ** ((1 - r) / r) * x ** (r - 1)
            - (q * x**s + 1 - q) ** ((1 - s) / s) * x ** (s - 1)
            - (r - s) * (1 - q) * (x - 1))


def f2(x: float, q: float, exps: ExponentPair) -> float:
    """``(1 - q)**-1 * d f1 / dx``."""
    _nonzero_exps(exps)
    r, s = exps.r, exps.s
    return ((r - 1) * (q + (1 - q) * x ** (-r)) ** ((1 - 2 * r) / r) * x ** (-r - 1)
            + (1 - s) * (q + (1 - q) * x ** (-s)) ** ((1 - 2 * s) / s) * x ** (-s - 1)
            - (r - s))


def limit_q0(x: float, exps: ExponentPair) -> float:
    """``lim F(x, 1; q, 1-q) / q`` as ``q -> 0+``."""
    if not x > 0:
        raise ValueError("x must be positive")
    r, s = exps.r, exps.s
    return pow_m1_over(x, r) - pow_m1_over(x, s) - 0.5 * (r - s) * (x - 1) ** 2


def limit_q1(x: float, exps: ExponentPair) -> float:
    """``lim F(x, 1; q, 1-q) / (1 - q)`` as ``q -> 1-``."""
    if not x > 0:
        raise ValueError("x must be positive")
    r, s = exps.r, exps.s
    # (x - x**(1-t))/t = -x * ((1/x)**t - 1)/t
    inv = 1.0 / x
    return (x * pow_m1_over(inv, r) - x * pow_m1_over(inv, s)
            - 0.5 * (r - s) * (x - 1) ** 2)


def limit_x0(q: float, exps: ExponentPair) -> float:
    """``lim F(x, 1; q, 1-q)`` as ``x -> 0+`` (``s < 0``)."""
    if not exps.s < 0:
        raise ValueError("the x -> 0 limit needs s < 0")
    return (1 - q) ** (1 / exps.r) - exps.half_diff * q * (1 - q)


def _need_profile_domain(exps: ExponentPair) -> None:
    if exps.r < 1:
        raise ValueError("profile needs r >= 1")


def lhs_zero_profile(y: float, exps: ExponentPair) -> float:
    """``y**(1/r - 1) - (r - s)(1 - y)/2`` on ``0 <= y <= 1`` with
    ``0**0 = 1``."""
    _need_profile_domain(exps)
    if not 0 <= y <= 1:
        raise ValueError("y must lie in [0, 1]")
    e = 1 / exps.r - 1
    head = 1.0 if e == 0 else y**e
    return head - exps.half_diff * (1 - y)


def lhs_zero_profile_argmin(exps: ExponentPair) -> float:
    """Closed-form minimizer of :func:`lhs_zero_profile` over ``[0, 1]``.

    At ``r = 1`` the profile is affine in ``y`` and the formula gives 0.
    """
    _need_profile_domain(exps)
    r = exps.r
    a = 1 - 1 / r
    y = (2 * a / (r - exps.s)) ** (1 / (2 - 1 / r))
    return min(max(y, 0.0), 1.0)


def cf_necessary_bound(r: float) -> float:
    """``(2 - 1/r)**(2 - 1/r) * (1 - 1/r)**-(1 - 1/r)`` with ``0**0 = 1``.

    Increases from 1 at ``r = 1`` toward 4.
    """
    if not r >= 1:
        raise ValueError("need r >= 1")
    a = 1 - 1 / r
    e = 2 - 1 / r
    tail = 1.0 if a == 0 else math.exp(-a * math.log(a))
    return math.exp(e * math.log(e)) * tail


def c0(r: float, s: float) -> float:
    return r**3 - (5 + 4 * s) * r**2 + (2 + 6 * s + 3 * s**2) * r - s * (2 + s)


def c_general(r: float, s: float, alpha1: float, alpha2: float) -> float:
    lin = (r - 1) * (2 * r - 1) * (1 - 3 * s) + (3 * r - 1) * (1 - 2 * s) * (1 - s)
    return c0(r, s) + lin * alpha1 / s + (2 * r - 1) * (r - 1) * alpha2


def c1(r: float, s: float) -> float:
    return r**3 - (6 + s) * r**2 + (s**2 + 4) * r - s * (s**2 - 6 * s + 4)


def c2(r: float, s: float) -> float:
    return (r - 1) * (-1 - 2 * s) - (1 - s) * (1 + s)


def c3(r: float, s: float) -> float:
    return c_general(r, s, 0.0, s)


def c4(r: float, s: float) -> float:
    if r in (1.0, 2.0):
        raise ValueError("c4 is undefined at r = 1 and r = 2")
    return c_general(r, s, -C4_ALPHA_CONST * s, (1 - s**2) * s / ((r - 1) * (r - 2)))


def c_max(r: float, s: float) -> float:
    """``max(c1, c2, c3, c4)`` at ``(r, s)``."""
    return max(c1(r, s), c2(r, s), c3(r, s), c4(r, s))


def alpha0(q1: float, x0: float, s: float) -> float:
    """Largest exponent ``alpha1`` with ``q + (1-q) x**-s <= x**alpha1``
    whenever ``0 <= q <= q1`` and ``x0 <= x**-s <= 1``."""
    if not 0 < x0 < 1:
        raise ValueError("x0 must lie in (0, 1)")
    if not 0 <= q1 <= 1:
        raise ValueError("q1 must lie in [0, 1]")
    if not -1 <= s < 0:
        raise ValueError("need -1 <= s < 0")
    return -s * math.log((1 - q1) * x0 + q1) / math.log(x0)


def _need_r_above_2(exps: ExponentPair) -> None:
    if not exps.r > 2:
        raise ValueError("need r > 2")


def alpha2_of(q2: float, exps: ExponentPair) -> float:
    _need_r_above_2(exps)
    if not 0.5 <= q2 < 1:
        raise ValueError("q2 must lie in [1/2, 1)")
    r, s = exps.r, exps.s
    return s * (1 - s**2) * q2 / ((r - 1) * (r - 2) * (1 - q2))


def q0_of(exps: ExponentPair) -> float:
    """The weight at which ``alpha2_of(q, exps) / s`` equals 1."""
    _need_r_above_2(exps)
    r, s = exps.r, exps.s
    k = (r - 1) * (r - 2)
    return k / (k + 1 - s**2)


def alpha1_power_margin(x: float, q: float, s: float, alpha1: float) -> float:
    """``x**alpha1 - (q + (1-q) x**-s)``; nonnegative in the admissible
    region of :func:`alpha0`."""
    return x**alpha1 - (q + (1 - q) * x ** (-s))


def alpha2_margin(x: float, q: float, exps: ExponentPair, alpha2: float) -> float:
    """Left minus right side of the linear-in-``q`` inequality that pairs
    ``alpha2`` with the stationarity condition of ``f2``."""
    r, s = exps.r, exps.s
    left = (1 - s) * (q * (1 + s) * x**s + (2 - s) * (1 - q))
    right = x**alpha2 * (r - 1) * (-q * (r + 1) * x**r + (r - 2) * (1 - q))
    return left - right


def critical_residual(x: float, q: float, exps: ExponentPair) -> float:
    """Log-ratio of the two sides of the stationarity condition of
    ``x -> f2(x, q)``; zero at interior critical points."""
    _nonzero_exps(exps)
    r, s = exps.r, exps.s
    denom = -q * (r + 1) * x**r + (r - 2) * (1 - q)
    if not denom > 0:
        raise NoCriticalPoint(
            f"-q(r+1)x^r + (r-2)(1-q) = {denom!r} <= 0")
    numer = (1 - s) * (q * (1 + s) * x**s + (2 - s) * (1 - q))
    ratio = numer / ((r - 1) * denom)
    if not ratio > 0:
        raise NoCriticalPoint(f"coefficient ratio {ratio!r} is not positive")
    lx = math.log(x)
    left = (1 - 3 * r) / r * math.log(q * x**r + 1 - q) + (r - 2) * lx
    right = (math.log(ratio)
             + (1 - 3 * s) / s * math.log(q + (1 - q) * x ** (-s))
             + (-1 - 2 * s) * lx)
    return left - right
