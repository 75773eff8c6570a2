import json
import math

import numpy as np
import pytest

from cfbounds.classify import Verdict, classify
from cfbounds.means import ExponentPair, Side, WeightedSample, cf_check, f_value
from cfbounds.search import (
    Certificate, MalformedCertificate, brute_force_extremum, brute_force_grid,
    coordinate_descent, search_counterexample, verify_certificate,
)
from cfbounds.suites import FAILS_PANEL


def _holds_pairs(rng, side, n, margin=0.05):
    """Random pairs classified HOLDS whose neighbours within ``margin`` also
    hold, so roundoff near a boundary cannot matter."""
    out = []
    while len(out) < n:
        s = float(rng.uniform(-1.5, 1.5))
        r = float(rng.uniform(s + 0.05, 3.5))
        ok = all(
            r + dr > s + ds
            and classify((r + dr, s + ds), side).verdict is Verdict.HOLDS
            for dr in (-margin, 0, margin) for ds in (-margin, 0, margin))
        if ok:
            out.append(ExponentPair(r, s))
    return out


class TestFailsPanel:
    @pytest.mark.parametrize("rs,side", FAILS_PANEL)
    def test_certificate_found_and_verified(self, rs, side):
        assert classify(rs, side).verdict is Verdict.FAILS
        cert = search_counterexample(rs, side, budget=100_000, seed=0)
        assert cert is not None
        assert cert.side is side
        assert cert.residual < 0
        assert verify_certificate(cert)

    @pytest.mark.parametrize("rs,side", FAILS_PANEL)
    def test_residual_matches_direct_check(self, rs, side):
        cert = search_counterexample(rs, side, budget=100_000, seed=0)
        b = cf_check(cert.sample, cert.exps)
        res = b.residual(side)
        assert res is not None
        scale = max(1.0, abs(b.gap))
        assert abs(res - cert.residual) <= 1e-9 * max(abs(res), scale * 1e-9)

    @pytest.mark.parametrize("rs,side", FAILS_PANEL)
    def test_sample_is_normalized(self, rs, side):
        cert = search_counterexample(rs, side, budget=100_000, seed=0)
        ref = cert.sample.x_min if side is Side.RHS else cert.sample.x_max
        assert ref == pytest.approx(1.0, rel=1e-15)
        assert cert.sample.n == 2


class TestSoundness:
    @pytest.mark.parametrize("side", list(Side))
    def test_no_false_alarms(self, side):
        rng = np.random.default_rng(7)
        for e in _holds_pairs(rng, side, 60):
            assert search_counterexample(e, side, budget=10_000, seed=1) is None, e

    @pytest.mark.parametrize("side", list(Side))
    def test_trivial_pair(self, side):
        assert search_counterexample((1, 0), side, budget=100_000) is None

    def test_any_certificate_is_a_real_violation(self):
        rng = np.random.default_rng(11)
        for _ in range(40):
            s = float(rng.uniform(-3, 3))
            r = float(rng.uniform(s + 0.1, s + 4))
            for side in Side:
                cert = search_counterexample((r, s), side, budget=5_000, seed=2)
                if cert is not None:
                    assert classify((r, s), side).verdict is not Verdict.HOLDS
                    assert verify_certificate(cert)


class TestDeterminism:
    def test_same_seed_same_result(self):
        a = search_counterexample((3.5, -0.4), Side.LHS, budget=20_000, seed=3)
        b = search_counterexample((3.5, -0.4), Side.LHS, budget=20_000, seed=3)
        assert a == b
        assert json.dumps(a.to_dict()) == json.dumps(b.to_dict())

    def test_same_seed_same_none(self):
        for _ in range(2):
            assert search_counterexample((1.2, 0.3), Side.RHS, budget=3_000, seed=5) is None

    def test_budget_of_one(self):
        out = search_counterexample((2.5, 0.5), Side.RHS, budget=1)
        assert out is None or verify_certificate(out)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            search_counterexample((1, 2), Side.RHS)
        with pytest.raises(ValueError):
            search_counterexample((2, 1), Side.RHS, budget=0)
        with pytest.raises(ValueError):
            search_counterexample((2, 1), "middle")


class TestCertificates:
    def _cert(self):
        return search_counterexample((2.5, 0.5), Side.RHS, budget=100_000)

    def test_round_trip(self):
        cert = self._cert()
        back = Certificate.from_dict(json.loads(json.dumps(cert.to_dict())))
        assert back == cert
        assert verify_certificate(back)

    def test_false_certificate(self):
        smp = WeightedSample([1.0, 1.0], [0.5, 0.5])
        cert = Certificate(Side.RHS, ExponentPair(2.5, 0.5), smp, -1.0, 0.0, "grid")
        assert verify_certificate(cert) is False

    def test_side_matters(self):
        cert = self._cert()
        other = Certificate(Side.LHS, cert.exps, cert.sample, cert.residual,
                            cert.gap, cert.provenance)
        assert verify_certificate(other) is False

    def test_holds_pair_never_verifies(self):
        smp = WeightedSample([1.0, 7.0], [0.3, 0.7])
        cert = Certificate(Side.RHS, ExponentPair(1, 0), smp, -1.0, 0.0, "grid")
        assert verify_certificate(cert) is False

    def test_tolerance_edge_is_deterministic(self):
        # violation of about 1e-10 relative: right at tol/10 with tol = 1e-9
        cert = self._cert()
        outs = {verify_certificate(cert, tol=t) for t in (abs(cert.residual) * 10,) * 3}
        assert len(outs) == 1

    def test_zero_minimum_has_no_upper_bound(self):
        smp = WeightedSample([0.0, 2.0], [0.5, 0.5])
        cert = Certificate(Side.RHS, ExponentPair(2.5, 0.5), smp, -1.0, 0.0, "grid")
        assert verify_certificate(cert) is False

    @pytest.mark.parametrize("mutate", [
        lambda d: d.pop("side"),
        lambda d: d.update(side="both"),
        lambda d: d.update(r=d["s"]),
        lambda d: d.update(weights=[0.5]),
        lambda d: d.update(weights=[0.4, 0.4]),
        lambda d: d.update(values="abc"),
        lambda d: d.update(provenance="guess"),
        lambda d: d.update(residual=None),
    ])
    def test_malformed(self, mutate):
        d = self._cert().to_dict()
        mutate(d)
        with pytest.raises(MalformedCertificate):
            Certificate.from_dict(d)

    def test_verify_rejects_non_certificate(self):
        with pytest.raises(MalformedCertificate):
            verify_certificate({"side": "rhs"})


class TestBruteForce:
    def test_trivial_pair_rhs(self):
        _, _, F = brute_force_extremum((1, 0), Side.RHS, 512)
        assert F <= 1e-12

    def test_known_failure_rhs(self):
        _, _, F = brute_force_extremum((2.2, 0.9), Side.RHS, 512)
        assert F > 0

    def test_known_failure_lhs(self):
        _, _, F = brute_force_extremum((3.5, -0.4), Side.LHS, 512)
        assert F < 0

    @pytest.mark.parametrize("side", list(Side))
    def test_degenerate_row_is_exact_zero(self, side):
        x, q, F = brute_force_grid((2.2, 0.9), side, 64)
        row = np.flatnonzero(x == 1.0)
        assert row.size == 1
        assert np.all(F[row[0]] == 0.0)

    def test_matches_library_f_value(self):
        x, q, F = brute_force_grid((2.5, -0.5), Side.RHS, 16)
        e = ExponentPair(2.5, -0.5)
        for i in (3, 8):
            for j in (2, 7, 13):
                smp = WeightedSample([1.0, x[i]], [1 - q[j], q[j]])
                assert F[i, j] == pytest.approx(f_value(smp, e), rel=1e-7, abs=1e-9)

    def test_small_grid_rejected(self):
        with pytest.raises(ValueError):
            brute_force_grid((2, 1), Side.RHS, 4)

    @pytest.mark.parametrize("side", list(Side))
    def test_oracles_agree_away_from_boundaries(self, side):
        rng = np.random.default_rng(99)
        n = 0
        while n < 25:
            s = float(rng.uniform(-2, 2))
            r = float(rng.uniform(s + 0.1, 4))
            c = classify((r, s), side)
            if c.verdict is Verdict.UNKNOWN:
                continue
            near = [classify((r + a, s + b), side).verdict
                    for a in (-0.1, 0.1) for b in (-0.1, 0.1) if r + a > s + b]
            if any(v is not c.verdict for v in near):
                continue
            n += 1
            _, _, F = brute_force_extremum((r, s), side, 256)
            found = search_counterexample((r, s), side, budget=20_000) is not None
            if c.verdict is Verdict.HOLDS:
                assert not found
                assert (F <= 1e-9) if side is Side.RHS else (F >= -1e-9)
            else:
                assert found, (r, s)


def test_coordinate_descent_finds_minimum():
    f = lambda p: (p[0] - 1.5) ** 2 + (p[1] + 0.25) ** 2
    x, fx, evals = coordinate_descent(f, [0.0, 0.0], [1.0, 1.0], rounds=60)
    assert fx < 1e-10
    assert x == pytest.approx([1.5, -0.25], abs=1e-5)
    assert evals <= 1 + 60 * 4


def test_coordinate_descent_respects_eval_cap():
    calls = []
    f = lambda p: calls.append(1) or float(p @ p)
    coordinate_descent(f, [3.0, 3.0], [1.0, 1.0], max_evals=5)
    assert len(calls) == 5
