"""Weighted power means, variance and the two-sided variance bound on
differences of power means.

All power means are evaluated in log space with the dominant value factored
out, so exponents of several hundred do not overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

DEFAULT_TOL = 1e-9
WEIGHT_SUM_TOL = 1e-9


class Side(str, Enum):
    """Which side of the bound ``lower <= gap <= upper`` is meant."""

    RHS = "rhs"
    LHS = "lhs"


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class WeightedSample:
    """Nonnegative values with positive weights summing to one.

    Weights whose sum is within ``1e-9`` of one are renormalized; anything
    further off is rejected.
    """

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        x = np.array(self.values, dtype=float).ravel()
        q = np.array(self.weights, dtype=float).ravel()
        if x.size == 0:
            raise ValueError("sample is empty")
        if x.shape != q.shape:
            raise ValueError(
                f"got {x.size} values but {q.size} weights")
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise ValueError("values must be finite and nonnegative")
        if not np.all(np.isfinite(q)) or np.any(q <= 0):
            raise ValueError("weights must be finite and positive")
        total = math.fsum(q)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(
                f"weights must sum to 1 (got {total!r})")
        if abs(total - 1.0) > 1e-15:
            q = q / total
        object.__setattr__(self, "values", _frozen(x))
        object.__setattr__(self, "weights", _frozen(q))

    @classmethod
    def two_point(cls, x: float, q: float) -> "WeightedSample":
        """The sample ``(1, x)`` with weights ``(1 - q, q)``."""
        return cls([1.0, x], [1.0 - q, q])

    @property
    def n(self) -> int:
        return int(self.values.size)

    @property
    def x_min(self) -> float:
        return float(self.values.min())

    @property
    def x_max(self) -> float:
        return float(self.values.max())

    def all_equal(self) -> bool:
        return bool(np.all(self.values == self.values[0]))

    def scaled(self, factor: float) -> "WeightedSample":
        return WeightedSample(self.values * factor, self.weights)

    def __eq__(self, other):
        if not isinstance(other, WeightedSample):
            return NotImplemented
        return (np.array_equal(self.values, other.values)
                and np.array_equal(self.weights, other.weights))

    def __hash__(self):
        return hash((self.values.tobytes(), self.weights.tobytes()))

    def __repr__(self):
        return (f"WeightedSample(values={self.values.tolist()}, "
                f"weights={self.weights.tolist()})")


@dataclass(frozen=True)
class ExponentPair:
    """Exponents ``r > s`` of the two means being compared."""

    r: float
    s: float

    def __post_init__(self):
        r, s = float(self.r), float(self.s)
        if not (math.isfinite(r) and math.isfinite(s)):
            raise ValueError("exponents must be finite")
        if not r > s:
            raise ValueError(f"need r > s, got r={r!r}, s={s!r}")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "s", s)

    @property
    def half_diff(self) -> float:
        return 0.5 * (self.r - self.s)


@dataclass(frozen=True)
class BoundCheck:
    """Lower bound, gap and upper bound for one sample.

    ``upper`` and ``rhs_residual`` are ``None`` when the smallest value is
    zero and the sample is not constant (the upper bound is undefined).
    """

    lower: float
    gap: float
    upper: Optional[float]
    lhs_residual: float
    rhs_residual: Optional[float]

    @property
    def upper_defined(self) -> bool:
        return self.upper is not None

    def residual(self, side: Side) -> Optional[float]:
        return self.rhs_residual if Side(side) is Side.RHS else self.lhs_residual

    def violates(self, side: Side, tol: float = DEFAULT_TOL) -> bool:
        res = self.residual(side)
        if res is None:
            return False
        return is_violation(res, self.gap, tol)


def is_violation(residual: float, gap: float, tol: float = DEFAULT_TOL) -> bool:
    """A residual counts as a violation below ``-tol * max(1, |gap|)``."""
    return residual < -tol * max(1.0, abs(gap))


def _check_r(r: float) -> float:
    r = float(r)
    if not math.isfinite(r):
        raise ValueError(f"exponent must be finite, got {r!r}")
    return r


OVERFLOW_EXP = 700.0


def _reference_log(x: np.ndarray, q: np.ndarray, lx: np.ndarray) -> float:
    """Log of the positive value with the largest weight.

    Offsets around it keep ``1 + sum q expm1(z)`` at least that weight, so the
    log1p form below is well conditioned.
    """
    w = np.where(x > 0, q, -1.0)
    return float(lx[int(np.argmax(w))])


def _log_mean_offset(x, q, lx, t: float, c: float) -> float:
    """``ln M_t - c`` for a sample with no zero value when ``t <= 0``."""
    with np.errstate(invalid="ignore"):
        u = np.where(x > 0, lx - c, -np.inf)
    pos = x > 0
    if t == 0:
        return math.fsum(q * u)
    spread = abs(t) * float(lx[pos].max() - lx[pos].min())
    if spread < 1e-7 and pos.all():
        # second-order cumulant expansion; expm1 underflows for tiny t
        m = math.fsum(q * u)
        return m + 0.5 * t * math.fsum(q * (u - m) ** 2)
    z = t * u
    z_top = float(z[pos].max())
    if z_top > OVERFLOW_EXP:
        with np.errstate(under="ignore"):
            return (z_top + math.log(math.fsum(q * np.exp(z - z_top)))) / t
    return math.log1p(math.fsum(q * np.expm1(z))) / t


def _log_means(sample: WeightedSample, exps):
    """``(c, ln M_e - c for e in exps)`` around a shared reference ``c``;
    ``-inf`` offsets for means that are 0."""
    x, q = sample.values, sample.weights
    has_zero = bool(np.any(x == 0))
    with np.errstate(divide="ignore"):
        lx = np.log(x)
    c = _reference_log(x, q, lx)
    out = []
    for t in exps:
        t = _check_r(t)
        if has_zero and t <= 0:
            out.append(-math.inf)
        else:
            out.append(_log_mean_offset(x, q, lx, t, c))
    return c, out


def log_power_mean(sample: WeightedSample, r: float) -> float:
    """Natural log of ``power_mean(sample, r)``; ``-inf`` when the mean is 0."""
    r = _check_r(r)
    if sample.all_equal():
        v = float(sample.values[0])
        return math.log(v) if v > 0 else -math.inf
    c, (d,) = _log_means(sample, (r,))
    return c + d


def power_mean(sample: WeightedSample, r: float) -> float:
    """Weighted power mean ``(sum q_i x_i**r)**(1/r)``.

    ``r = 0`` gives the weighted geometric mean. A zero value with
    ``r <= 0`` gives 0.
    """
    if sample.all_equal():
        _check_r(r)
        return float(sample.values[0])
    if r == 1:
        return math.fsum(sample.weights * sample.values)
    return math.exp(log_power_mean(sample, r))


def mean_gap(sample: WeightedSample, r: float, s: float) -> float:
    """``power_mean(sample, r) - power_mean(sample, s)`` without cancellation
    in the exponent."""
    if sample.all_equal():
        _check_r(r)
        _check_r(s)
        return 0.0
    c, (dr, ds) = _log_means(sample, (r, s))
    if ds == -math.inf:
        return math.exp(c + dr)
    return math.exp(c + ds) * math.expm1(dr - ds)


def variance(sample: WeightedSample) -> float:
    """Weighted second central moment ``sum q_i (x_i - A)**2``."""
    if sample.all_equal():
        return 0.0
    x, q = sample.values, sample.weights
    a = math.fsum(q * x)
    return math.fsum(q * (x - a) ** 2)


def cf_check(sample: WeightedSample, exps: ExponentPair) -> BoundCheck:
    """Evaluate ``(r-s) var/(2 x_max) <= M_r - M_s <= (r-s) var/(2 x_min)``."""
    if sample.all_equal():
        return BoundCheck(0.0, 0.0, 0.0, 0.0, 0.0)
    gap = mean_gap(sample, exps.r, exps.s)
    scaled_var = exps.half_diff * variance(sample)
    lower = scaled_var / sample.x_max
    x_min = sample.x_min
    if x_min > 0:
        upper: Optional[float] = scaled_var / x_min
        rhs_res: Optional[float] = upper - gap
    else:
        upper = rhs_res = None
    return BoundCheck(lower=lower, gap=gap, upper=upper,
                      lhs_residual=gap - lower, rhs_residual=rhs_res)


@dataclass(frozen=True)
class BatchCheck:
    """Arrays of :class:`BoundCheck` fields, one entry per sample; undefined
    upper bounds are NaN."""

    lower: np.ndarray
    gap: np.ndarray
    upper: np.ndarray

    @property
    def lhs_residual(self) -> np.ndarray:
        return self.gap - self.lower

    @property
    def rhs_residual(self) -> np.ndarray:
        return self.upper - self.gap

    def residual(self, side: Side) -> np.ndarray:
        return self.rhs_residual if Side(side) is Side.RHS else self.lhs_residual

    def relative_residual(self, side: Side) -> np.ndarray:
        return self.residual(side) / np.maximum(1.0, np.abs(self.gap))


def cf_check_batch(values, weights, exps: ExponentPair) -> BatchCheck:
    """Vectorised :func:`cf_check` over the rows of ``(m, k)`` arrays.

    Rows with fewer than ``k`` points are padded with zero weights. Row sums
    follow the same rule as :class:`WeightedSample`. Sums are plain floating
    point, not compensated.
    """
    from cfbounds import kernels

    x = np.atleast_2d(np.asarray(values, dtype=float))
    q = np.atleast_2d(np.asarray(weights, dtype=float))
    if x.shape != q.shape:
        raise ValueError(f"values {x.shape} and weights {q.shape} differ in shape")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("values must be finite and nonnegative")
    if not np.all(np.isfinite(q)) or np.any(q < 0):
        raise ValueError("weights must be finite and nonnegative")
    total = q.sum(axis=1)
    if np.any(np.abs(total - 1.0) > WEIGHT_SUM_TOL):
        bad = int(np.argmax(np.abs(total - 1.0)))
        raise ValueError(f"row {bad}: weights must sum to 1 (got {total[bad]!r})")
    q = q / total[:, None]
    lower, gap, upper = kernels.batch_check(x, q, exps.r, exps.s)
    return BatchCheck(lower, gap, upper)


def f_value(sample: WeightedSample, exps: ExponentPair) -> float:
    """``M_r - M_s - (r-s)/2 * var``.

    With the smallest value scaled to 1 the upper bound is ``F <= 0``; with
    the largest scaled to 1 the lower bound is ``F >= 0``.
    """
    return mean_gap(sample, exps.r, exps.s) - exps.half_diff * variance(sample)


def normalized(sample: WeightedSample, side: Side) -> WeightedSample:
    """Rescale so that ``x_min = 1`` (RHS) or ``x_max = 1`` (LHS)."""
    ref = sample.x_min if Side(side) is Side.RHS else sample.x_max
    if ref <= 0:
        raise ValueError("cannot normalize by a zero value")
    return sample.scaled(1.0 / ref)


def as_sample(values: Sequence[float], weights: Sequence[float]) -> WeightedSample:
    return WeightedSample(np.asarray(values, float), np.asarray(weights, float))
