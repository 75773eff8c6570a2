"""Property suites behind ``cfbounds verify --suite NAME``.

Each suite returns a list of :class:`Outcome`; a suite fails if any outcome
has ``passed < total``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from cfbounds import lab
from cfbounds.classify import Verdict, classify_lhs, classify_rhs, region_map
from cfbounds.means import (
    ExponentPair, Side, WeightedSample, cf_check, power_mean, variance,
)
from cfbounds.search import search_counterexample, verify_certificate

FAILS_PANEL = (
    ((2.5, 0.5), Side.RHS),
    ((2.2, -0.9), Side.RHS),
    ((-0.1, -0.5), Side.RHS),
    ((1.5, -1.2), Side.RHS),
    ((0.9, 0.5), Side.LHS),
    ((3.5, -0.4), Side.LHS),
    ((2.5, 1.4), Side.LHS),
)


@dataclass
class Outcome:
    name: str
    passed: int
    total: int

    @property
    def ok(self) -> bool:
        return self.passed == self.total


def random_sample(rng, n_max=8, lo=1e-3, hi=10.0) -> WeightedSample:
    n = int(rng.integers(1, n_max + 1))
    x = rng.uniform(lo, hi, n)
    q = rng.dirichlet(np.ones(n))
    q = np.maximum(q, 1e-12)
    return WeightedSample(x, q / q.sum())


def random_sample_batch(rng, m, n_max=8, lo=1e-3, hi=10.0):
    """``m`` random samples as zero-padded ``(m, n_max)`` value and weight
    arrays; sizes are uniform in ``1..n_max`` and weights uniform on the
    simplex."""
    n = rng.integers(1, n_max + 1, m)
    x = rng.uniform(lo, hi, (m, n_max))
    g = rng.gamma(1.0, size=(m, n_max))
    g[np.arange(n_max)[None, :] >= n[:, None]] = 0.0
    return x, g / g.sum(axis=1, keepdims=True)


def c_sign_grid():
    """Grid of ``(r, s)`` with ``s`` in ``[-1/2, 0)`` and ``r`` in
    ``(2, 3 - s]``, step 1e-3, built from integers so the endpoint is exact.

    Returns ``(r, s, c4_mask)`` where ``c4_mask`` selects ``r <= 3`` or
    ``r = 3 - s``.
    """
    rs, ss, mask = [], [], []
    for i in range(500):
        s_milli = -500 + i
        top = 1000 - s_milli
        k = np.arange(1, top + 1)
        r = 2.0 + k / 1000.0
        rs.append(r)
        ss.append(np.full(k.size, s_milli / 1000.0))
        mask.append((k <= 1000) | (k == top))
    return np.concatenate(rs), np.concatenate(ss), np.concatenate(mask)


def c_values_grid(r, s):
    """Vectorised ``c1..c4`` over arrays (same formulas as :mod:`cfbounds.lab`)."""
    c1 = lab.c1(r, s)
    c2 = lab.c2(r, s)
    c3 = lab.c3(r, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        c4 = lab.c_general(r, s, -lab.C4_ALPHA_CONST * s,
                           (1 - s**2) * s / ((r - 1) * (r - 2)))
    return c1, c2, c3, c4


def suite_means(seed: int = 0) -> list[Outcome]:
    rng = np.random.default_rng(seed)
    grid = np.linspace(-6, 6, 25)
    mono = homog = perm = cont = 0
    n = 200
    for _ in range(n):
        smp = random_sample(rng)
        if smp.n < 2:
            smp = WeightedSample([0.5, 3.0], [0.4, 0.6])
        vals = [power_mean(smp, t) for t in grid]
        mono += all(b > a for a, b in zip(vals, vals[1:]))
        lam = float(rng.uniform(0.01, 100))
        t = float(rng.uniform(-5, 5))
        homog += math.isclose(power_mean(smp.scaled(lam), t),
                              lam * power_mean(smp, t), rel_tol=1e-12)
        order = rng.permutation(smp.n)
        shuffled = WeightedSample(smp.values[order], smp.weights[order])
        perm += variance(shuffled) == variance(smp) and variance(smp) >= 0
        g = power_mean(smp, 0.0)
        cont += all(math.isclose(power_mean(smp, e), g, rel_tol=1e-9)
                    for e in (1e-13, -1e-13))
    eq = 0
    for _ in range(100):
        k = int(rng.integers(1, 9))
        c = float(rng.uniform(0.01, 100))
        q = rng.dirichlet(np.ones(k))
        e = ExponentPair(float(rng.uniform(0, 4)), float(rng.uniform(-4, 0)))
        b = cf_check(WeightedSample(np.full(k, c), q), e)
        eq += max(abs(b.gap), abs(b.lower), abs(b.upper)) <= 1e-12
    return [
        Outcome("monotone in r", mono, n),
        Outcome("homogeneous of degree 1", homog, n),
        Outcome("variance permutation-invariant", perm, n),
        Outcome("r=0 limit continuity", cont, n),
        Outcome("equality for constant samples", eq, 100),
    ]


def suite_lemmas(seed: int = 0) -> list[Outcome]:
    rng = np.random.default_rng(seed)
    r, s, mask = c_sign_grid()
    c1, c2, c3, c4 = c_values_grid(r, s)
    worst = np.maximum(np.maximum(c1, c2), c3)
    ok_main = int(np.sum(worst <= 1e-12))
    ok_c4 = int(np.sum(c4[mask] <= 1e-12))
    out = [
        Outcome("c1,c2,c3 <= 0 on grid", ok_main, r.size),
        Outcome("c4 <= 0 on its subdomain", ok_c4, int(mask.sum())),
    ]
    n = 1000
    good = 0
    for _ in range(n):
        x, q, e = random_f2_point(rng)
        h = 1e-6 * x
        fd = (lab.f1(x + h, q, e) - lab.f1(x - h, q, e)) / (2 * h) / (1 - q)
        v = lab.f2(x, q, e)
        good += abs(v - fd) <= 1e-6 * (1 + abs(v))
    out.append(Outcome("f2 = d f1/dx / (1-q)", good, n))
    a0 = lab.alpha0(5 / 6, 1 / 5, -1)
    out.append(Outcome("0.0889 <= alpha0(5/6, 1/5, -1) < 0.089",
                       int(lab.C4_ALPHA_CONST <= a0 < 0.089), 1))
    rr = np.geomspace(1, 1e6, 400)
    b = [lab.cf_necessary_bound(float(v)) for v in rr]
    out.append(Outcome("necessary bound increasing",
                       sum(y > x for x, y in zip(b, b[1:])), len(b) - 1))
    return out


def random_f2_point(rng):
    """Random ``(x, q, exps)`` in the domain used by the derivative check."""
    while True:
        r = float(rng.uniform(-3, 4))
        s = float(rng.uniform(-3, r))
        if abs(r) > 0.05 and abs(s) > 0.05 and r - s > 1e-3:
            break
    x = float(np.exp(rng.uniform(-2, 2)))
    q = float(rng.uniform(0.01, 0.99))
    return x, q, ExponentPair(r, s)


def suite_regions(seed: int = 0) -> list[Outcome]:
    rng = np.random.default_rng(seed)
    eps = 1e-9
    sharp = 0
    probes = [
        ((1.0 + eps, -1.0), (1.0 - eps, -1.0)),   # r+s = 0
        ((1.8, 1.2 - eps), (1.8, 1.2 + eps)),     # r+s = 3
        ((2.0 - eps, 0.5), (2.0 + eps, 0.5)),     # r = 2
        ((1.5, -1.0 + eps), (1.5, -1.0 - eps)),   # s = -1
    ]
    for inside, outside in probes:
        sharp += (classify_rhs(inside).verdict is Verdict.HOLDS
                  and classify_rhs(outside).verdict is Verdict.FAILS)
    never_unknown = 0
    n = 2000
    subsume = subsume_n = 0
    for _ in range(n):
        s = float(rng.uniform(-0.5, 1))
        r = float(rng.uniform(s + 1e-6, 5))
        never_unknown += classify_lhs((r, s)).verdict is not Verdict.UNKNOWN
        if (r - 1) * (r - 2) <= 1 - s * s and r >= 1 and 0 <= r + s <= 3:
            subsume_n += 1
            subsume += classify_lhs((r, s)).verdict is Verdict.HOLDS
    a = region_map((-1, 4), (-5, 4), 41)
    b = region_map((-1, 4), (-5, 4), 41)
    same = int([(c.r, c.s, c.rhs, c.lhs) for c in a]
               == [(c.r, c.s, c.rhs, c.lhs) for c in b])
    return [
        Outcome("upper-bound region boundaries are sharp", sharp, len(probes)),
        Outcome("no UNKNOWN for -1/2 <= s <= 1", never_unknown, n),
        Outcome("(r-1)(r-2) <= 1-s^2 agrees with the iff rule", subsume, subsume_n),
        Outcome("region map deterministic", same, 1),
    ]


def suite_search(seed: int = 0) -> list[Outcome]:
    found = 0
    for exps, side in FAILS_PANEL:
        cert = search_counterexample(exps, side, budget=100_000, seed=seed)
        found += cert is not None and verify_certificate(cert)
    quiet = 0
    holds = [((1.0, 0.0), Side.RHS), ((1.0, 0.0), Side.LHS),
             ((2.0, -1.0), Side.RHS), ((1.5, 0.5), Side.LHS),
             ((2.5, 0.3), Side.LHS), ((0.5, 0.2), Side.RHS)]
    for exps, side in holds:
        quiet += search_counterexample(exps, side, budget=10_000, seed=seed) is None
    a = search_counterexample((3.5, -0.4), Side.LHS, budget=20_000, seed=seed)
    b = search_counterexample((3.5, -0.4), Side.LHS, budget=20_000, seed=seed)
    return [
        Outcome("counterexample for every FAILS panel pair", found, len(FAILS_PANEL)),
        Outcome("no counterexample in HOLDS regions", quiet, len(holds)),
        Outcome("search deterministic", int(a == b), 1),
    ]


SUITES = {
    "means": suite_means,
    "lemmas": suite_lemmas,
    "regions": suite_regions,
    "search": suite_search,
}
