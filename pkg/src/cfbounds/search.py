"""Counterexample search over two-point samples.

Extremal configurations of the residual put two distinct values on the
sample with one weight near a boundary, so the search space is the sample
``(1, x)`` with weights ``(1 - q, q)``, rescaled so the smallest value is 1
(upper bound) or the largest is 1 (lower bound).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import mpmath
import numpy as np

from cfbounds import kernels, lab
from cfbounds.means import (
    DEFAULT_TOL, ExponentPair, Side, WeightedSample, is_violation, normalized,
)

X_LOG10_RANGE = (-8.0, 8.0)
Q_FLOOR = 1e-15
BOUNDARY_Q = (1e-6, 1 - 1e-6)
PROVENANCES = ("grid", "refine", "limit-seed")
REFINE_ROUNDS = 20
REFINE_SHRINK = 0.5
REFINE_STARTS = 4


class MalformedCertificate(ValueError):
    pass


@dataclass(frozen=True)
class Certificate:
    """A two-point sample violating one side of the bound.

    ``residual`` is the side's signed residual (negative) and ``gap`` the
    mean difference, both for ``sample`` exactly as stored.
    """

    side: Side
    exps: ExponentPair
    sample: WeightedSample
    residual: float
    gap: float
    provenance: str

    def to_dict(self) -> dict:
        return {
            "side": self.side.value,
            "r": self.exps.r,
            "s": self.exps.s,
            "values": [float(v) for v in self.sample.values],
            "weights": [float(w) for w in self.sample.weights],
            "residual": self.residual,
            "gap": self.gap,
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Certificate":
        try:
            side = Side(d["side"])
            exps = ExponentPair(float(d["r"]), float(d["s"]))
            sample = WeightedSample(d["values"], d["weights"])
            residual = float(d["residual"])
            gap = float(d["gap"])
            prov = str(d["provenance"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedCertificate(str(exc)) from exc
        if prov not in PROVENANCES:
            raise MalformedCertificate(f"unknown provenance {prov!r}")
        return cls(side, exps, sample, residual, gap, prov)


def _logit(q):
    return np.log(q) - np.log1p(-q)


def _expit(v):
    return 1.0 / (1.0 + np.exp(-v))


class _Budget:
    def __init__(self, total: int):
        self.left = int(total)

    def take(self, n: int) -> int:
        n = max(0, min(int(n), self.left))
        self.left -= n
        return n


def _score(res: float, gap: float) -> float:
    return res / max(1.0, abs(gap))


def _make_certificate(x, q, exps, side, provenance) -> Certificate:
    sample = normalized(WeightedSample.two_point(float(x), float(q)), side)
    res, gap = kernels.two_point_eval(float(x), float(q), exps.r, exps.s,
                                      Side(side) is Side.RHS)
    return Certificate(Side(side), exps, sample, res, gap, provenance)


def coordinate_descent(f: Callable[[np.ndarray], float], start: Sequence[float],
                       steps: Sequence[float], rounds: int = REFINE_ROUNDS,
                       shrink: float = REFINE_SHRINK,
                       max_evals: Optional[int] = None,
                       stop: Optional[Callable[[float], bool]] = None):
    """Compass search along coordinate axes.

    Each round tries ``+step`` and ``-step`` on every coordinate and keeps any
    improvement; a round with no improvement shrinks all steps. Returns
    ``(point, value, evals)``.
    """
    x = np.array(start, dtype=float)
    h = np.array(steps, dtype=float)
    fx = f(x)
    evals = 1
    for _ in range(rounds):
        improved = False
        for i in range(x.size):
            for sign in (1.0, -1.0):
                if max_evals is not None and evals >= max_evals:
                    return x, fx, evals
                trial = x.copy()
                trial[i] += sign * h[i]
                ft = f(trial)
                evals += 1
                if ft < fx:
                    x, fx, improved = trial, ft, True
                    if stop is not None and stop(fx):
                        return x, fx, evals
                    break
        if not improved:
            h *= shrink
    return x, fx, evals


def _seed_points(exps: ExponentPair, side: Side) -> list[tuple[float, float]]:
    """Candidate ``(x, q)`` where a boundary limit of the residual has the
    violating sign."""
    r, s = exps.r, exps.s
    upper = side is Side.RHS
    lo, hi = (0.0, X_LOG10_RANGE[1]) if upper else (X_LOG10_RANGE[0], 0.0)
    xs = [float(v) for v in np.logspace(lo, hi, 49)[1:]] if upper \
        else [float(v) for v in np.logspace(lo, hi, 49)[:-1]]
    out = []
    for x in xs:
        lx = math.log(x)
        # weight scales that keep the boundary limit in its linear regime
        small_q = math.exp(min(0.0, -r * lx, -s * lx))
        small_1mq = math.exp(min(0.0, r * lx, s * lx))
        l0 = lab.limit_q0(x, exps)
        l1 = lab.limit_q1(x, exps)
        if (l0 > 0) if upper else (l0 < 0):
            for c in (1e-2, 1e-4, 1e-6):
                out.append((x, max(c * small_q, Q_FLOOR)))
        if (l1 > 0) if upper else (l1 < 0):
            for c in (1e-2, 1e-4, 1e-6):
                out.append((x, 1.0 - max(c * small_1mq, Q_FLOOR)))
    if not upper and s < 0 and r >= 1:
        y_star = lab.lhs_zero_profile_argmin(exps)
        ys = sorted({min(max(y_star, 1e-12), 1 - 1e-12),
                     *np.logspace(-12, -0.01, 12).tolist()})
        for y in ys:
            if lab.lhs_zero_profile(y, exps) < 0:
                x = math.exp(max(math.log(1e8 / y) / s, -690.0))
                out.append((x, 1.0 - y))
    return out


def _grid_axes(n_x: int, n_q: int, seed: int):
    rng = np.random.default_rng(seed)
    lx = np.linspace(*X_LOG10_RANGE, n_x)
    if n_x > 2:
        step = lx[1] - lx[0]
        lx[1:-1] += rng.uniform(-0.5, 0.5, n_x - 2) * step
    v_max = float(_logit(np.float64(1 - Q_FLOOR * 10)))
    v = np.linspace(-v_max, v_max, max(n_q - 2, 2))
    if v.size > 2:
        vstep = v[1] - v[0]
        v[1:-1] += rng.uniform(-0.5, 0.5, v.size - 2) * vstep
    qs = np.union1d(_expit(v), np.array(BOUNDARY_Q))
    return 10.0 ** lx, qs


def search_counterexample(exps, side, budget: int = 100_000, seed: int = 0,
                          tol: float = DEFAULT_TOL) -> Optional[Certificate]:
    """Look for a two-point sample violating ``side`` of the bound.

    Runs limit seeds, then a log-spaced ``x`` / logit-spaced ``q`` grid, then
    coordinate descent from the best cells. At most ``budget`` residual
    evaluations are spent. Returns ``None`` when nothing beats the
    tolerance.
    """
    if not isinstance(exps, ExponentPair):
        exps = ExponentPair(*exps)
    side = Side(side)
    if budget < 1:
        raise ValueError("budget must be at least 1")
    upper = side is Side.RHS
    r, s = exps.r, exps.s
    left = _Budget(budget)

    def violating(res, gap):
        return is_violation(res, gap, tol)

    # limit seeds
    seeds = _seed_points(exps, side)
    n_seed = left.take(min(len(seeds), max(1, budget // 10)))
    seed_scores = []
    for x, q in seeds[:n_seed]:
        res, gap = kernels.two_point_eval(x, q, r, s, upper)
        seed_scores.append((_score(res, gap), x, q, violating(res, gap)))
    hits = [t for t in seed_scores if t[3]]
    if hits:
        _, x, q, _ = min(hits, key=lambda t: t[0])
        return _make_certificate(x, q, exps, side, "limit-seed")

    # grid
    grid_evals = int(0.8 * left.left)
    n_q = max(2, int(math.sqrt(grid_evals / 2)))
    n_x = max(2, (grid_evals // (n_q + 2)))
    starts = []
    if grid_evals >= 4:
        xs, qs = _grid_axes(n_x, n_q, seed)
        left.take(xs.size * qs.size)
        res, gap = kernels.two_point_grid(xs, qs, r, s, upper)
        score = res / np.maximum(1.0, np.abs(gap))
        score = np.where(np.isfinite(score), score, np.inf)
        flat = np.argsort(score, axis=None, kind="stable")
        i, j = np.unravel_index(flat[0], score.shape)
        if violating(res[i, j], gap[i, j]):
            return _make_certificate(xs[i], qs[j], exps, side, "grid")
        for k in flat[:REFINE_STARTS]:
            i, j = np.unravel_index(k, score.shape)
            if np.isfinite(score[i, j]):
                starts.append((xs[i], qs[j]))
        du = math.log(10) * (X_LOG10_RANGE[1] - X_LOG10_RANGE[0]) / max(n_x - 1, 1)
        dv = 2 * float(_logit(np.float64(1 - Q_FLOOR * 10))) / max(n_q - 3, 1)
    else:
        du, dv = math.log(10), 2.0
    starts.extend((x, q) for sc, x, q, _ in sorted(seed_scores)[:REFINE_STARTS])

    # local refinement in (ln x, logit q)
    v_lim = float(_logit(np.float64(1 - Q_FLOOR)))
    u_lim = math.log(10) * X_LOG10_RANGE[1]
    found = []

    def objective(p):
        u = min(max(p[0], -u_lim), u_lim)
        v = min(max(p[1], -v_lim), v_lim)
        res_, gap_ = kernels.two_point_eval(math.exp(u), float(_expit(v)), r, s, upper)
        sc = _score(res_, gap_)
        if violating(res_, gap_):
            found.append((sc, u, v))
        return sc if math.isfinite(sc) else math.inf

    for x, q in starts:
        if left.left <= 0:
            break
        found.clear()
        start = (math.log(x), float(_logit(np.float64(q))))
        _, _, used = coordinate_descent(
            objective, start, (2 * du, 2 * dv), max_evals=left.left,
            stop=lambda _v: bool(found))
        left.take(used)
        if found:
            _, u, v = min(found)
            return _make_certificate(math.exp(u), float(_expit(v)), exps, side,
                                     "refine")
    return None


def _mp_log_mean(xs, qs, t):
    if all(x == xs[0] for x in xs):
        return mpmath.log(xs[0]) if xs[0] > 0 else mpmath.ninf
    if t == 0 or (t < 0 and any(x == 0 for x in xs)):
        if any(x == 0 for x in xs):
            return mpmath.ninf
        return mpmath.fsum(q * mpmath.log(x) for x, q in zip(xs, qs))
    total = mpmath.fsum(q * mpmath.power(x, t) for x, q in zip(xs, qs))
    return mpmath.log(total) / t


def mp_bound_check(sample: WeightedSample, exps: ExponentPair, dps: int = 50):
    """``(lower, gap, upper)`` at ``dps`` decimal digits, straight from the
    definitions. ``upper`` is ``None`` when the smallest value is 0."""
    with mpmath.workdps(dps):
        xs = [mpmath.mpf(float(v)) for v in sample.values]
        qs = [mpmath.mpf(float(w)) for w in sample.weights]
        wsum = mpmath.fsum(qs)
        qs = [q / wsum for q in qs]
        r, s = mpmath.mpf(exps.r), mpmath.mpf(exps.s)
        gap = mpmath.exp(_mp_log_mean(xs, qs, r)) - mpmath.exp(_mp_log_mean(xs, qs, s))
        a = mpmath.fsum(q * x for x, q in zip(xs, qs))
        var = mpmath.fsum(q * (x - a) ** 2 for x, q in zip(xs, qs))
        k = (r - s) / 2 * var
        lower = k / max(xs)
        upper = k / min(xs) if min(xs) > 0 else None
        return lower, gap, upper


def verify_certificate(cert: Certificate, tol: float = DEFAULT_TOL) -> bool:
    """Recompute the certificate at 50 digits; true iff the stated side is
    still violated by more than ``tol / 10`` (relative to ``max(1, |gap|)``)."""
    if not isinstance(cert, Certificate):
        raise MalformedCertificate(f"expected a Certificate, got {type(cert).__name__}")
    if not isinstance(cert.sample, WeightedSample) or not isinstance(cert.exps, ExponentPair):
        raise MalformedCertificate("certificate fields have the wrong types")
    lower, gap, upper = mp_bound_check(cert.sample, cert.exps)
    if cert.side is Side.RHS:
        if upper is None:
            return False
        res = upper - gap
    else:
        res = gap - lower
    return bool(res < -(tol / 10) * max(1, abs(gap)))


def brute_force_grid(exps, side, grid_n: int = 512):
    """Exhaustive n=2 oracle grid for the normalized residual ``F``.

    Evaluates ``F = M_r - M_s - (r-s)/2 var`` with plain powers: values
    ``(1, x)``, ``x`` in ``[1, 1e8]`` for the upper side and ``(x, 1)``, ``x`` in
    ``[1e-8, 1]`` for the lower side, weight ``q`` on ``x`` logit-spaced in
    ``[1e-15, 1 - 1e-15]``. Returns ``(x, q, F)`` with ``F`` of shape
    ``(grid_n, grid_n)``; non-finite cells are NaN.
    """
    if not isinstance(exps, ExponentPair):
        exps = ExponentPair(*exps)
    side = Side(side)
    if grid_n < 8:
        raise ValueError("grid_n must be at least 8")
    r, s = exps.r, exps.s
    if side is Side.RHS:
        x = np.geomspace(1.0, 1e8, grid_n)
    else:
        x = np.geomspace(1e-8, 1.0, grid_n)
    v = np.linspace(-math.log(1e15), math.log(1e15), grid_n)
    q = 1.0 / (1.0 + np.exp(-v))
    X = x[:, None]
    Q = q[None, :]
    P = 1.0 - Q

    def mean(t):
        if t == 0:
            return np.exp(Q * np.log(X))
        return (Q * X**t + P) ** (1.0 / t)

    with np.errstate(over="ignore", invalid="ignore"):
        a = Q * X + P
        var = Q * (X - a) ** 2 + P * (1.0 - a) ** 2
        F = mean(r) - mean(s) - 0.5 * (r - s) * var
    return x, q, np.where(np.isfinite(F), F, np.nan)


def brute_force_extremum(exps, side, grid_n: int = 512):
    """``(x, q, F)`` at the max of ``F`` (upper side) or its min (lower side)
    over :func:`brute_force_grid`."""
    side = Side(side)
    x, q, F = brute_force_grid(exps, side, grid_n)
    k = int(np.nanargmax(F) if side is Side.RHS else np.nanargmin(F))
    i, j = np.unravel_index(k, F.shape)
    return float(x[i]), float(q[j]), float(F[i, j])
