import importlib
import math

import numpy as np
import pytest

from cfbounds import _pykernels, kernels
from cfbounds.means import ExponentPair, Side, WeightedSample, cf_check, normalized

try:
    from cfbounds import _ckernels
except ImportError:  # pragma: no cover
    _ckernels = None

BACKENDS = [pytest.param(_pykernels, id="python")]
BACKENDS.append(pytest.param(
    _ckernels, id="cython",
    marks=pytest.mark.skipif(_ckernels is None, reason="extension not built")))


def reference(x, q, r, s, upper):
    side = Side.RHS if upper else Side.LHS
    b = cf_check(normalized(WeightedSample.two_point(x, q), side), ExponentPair(r, s))
    return b.residual(side), b.gap


@pytest.mark.parametrize("impl", BACKENDS)
@pytest.mark.parametrize("upper", [True, False])
def test_matches_cf_check(impl, upper, rng):
    for _ in range(300):
        x = float(10 ** rng.uniform(-4, 4))
        q = float(rng.uniform(0.001, 0.999))
        s = float(rng.uniform(-3, 2))
        r = s + float(rng.uniform(0.05, 3))
        res, gap = impl.two_point_eval(x, q, r, s, upper)
        ref_res, ref_gap = reference(x, q, r, s, upper)
        scale = max(1.0, abs(ref_gap), abs(ref_res))
        assert abs(res - ref_res) <= 1e-11 * scale
        assert abs(gap - ref_gap) <= 1e-11 * max(1.0, abs(ref_gap))


@pytest.mark.parametrize("impl", BACKENDS)
def test_zero_exponent_branch(impl):
    res, gap = impl.two_point_eval(4.0, 0.5, 1.0, 0.0, True)
    assert gap == pytest.approx(0.5, rel=1e-14)
    assert res == pytest.approx(1.125 - 0.5, rel=1e-14)


@pytest.mark.parametrize("impl", BACKENDS)
def test_degenerate_row(impl):
    res, gap = impl.two_point_grid(np.array([1.0]), np.linspace(0.1, 0.9, 5), 2.5, -1.0, True)
    assert np.all(res == 0.0) and np.all(gap == 0.0)


@pytest.mark.skipif(_ckernels is None, reason="extension not built")
def test_backends_agree_on_grid():
    xs = np.geomspace(1e-8, 1e8, 97)
    qs = 1 / (1 + np.exp(-np.linspace(-30, 30, 41)))
    for r, s in [(2.5, 0.5), (-0.1, -0.5), (3.5, -0.4), (1.0, 0.0), (0.0, -2.0)]:
        for upper in (True, False):
            res_a, gap_a = _pykernels.two_point_grid(xs, qs, r, s, upper)
            res_b, gap_b = _ckernels.two_point_grid(xs, qs, r, s, upper)
            assert np.all(np.abs(gap_a - gap_b) <= 1e-13 * np.abs(gap_a))
            scale = np.maximum(np.abs(res_a), np.abs(gap_a))
            assert np.all(np.abs(res_a - res_b) <= 1e-13 * scale)


def test_large_x_stays_finite():
    res, gap = _pykernels.two_point_grid(np.array([1e8]), np.array([1e-15, 0.5]), 6.0, -6.0, True)
    assert np.all(np.isfinite(res)) and np.all(np.isfinite(gap))


def test_env_forces_python_backend(monkeypatch):
    monkeypatch.setenv("CFBOUNDS_BACKEND", "python")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
        assert mod.two_point_eval is _pykernels.two_point_eval
    finally:
        monkeypatch.delenv("CFBOUNDS_BACKEND")
        importlib.reload(kernels)


def test_default_backend_prefers_extension():
    expected = "python" if _ckernels is None else "cython"
    assert kernels.BACKEND == expected
    assert math.isfinite(kernels.two_point_eval(2.0, 0.5, 1.0, 0.0, True)[0])


@pytest.mark.parametrize("impl", BACKENDS)
def test_tiny_weight_on_dominant_value(impl):
    mpmath = pytest.importorskip("mpmath")
    from cfbounds.search import mp_bound_check
    x, q, r, s = 18478.497974222908, 1e-11, 2.5, -0.5
    res, gap = impl.two_point_eval(x, q, r, s, True)
    smp = WeightedSample.two_point(x, q)
    lower, g, upper = mp_bound_check(smp, ExponentPair(r, s))
    assert gap == pytest.approx(float(g), rel=1e-12)
    assert res == pytest.approx(float(upper - g), rel=1e-9)


def _batch(rng, m=400, k=6):
    x = rng.uniform(1e-3, 10, (m, k))
    x[rng.random((m, k)) < 0.05] = 0.0
    n = rng.integers(1, k + 1, m)
    q = rng.gamma(1.0, size=(m, k))
    q[np.arange(k)[None, :] >= n[:, None]] = 0.0
    x[:3] = 2.5
    return x, q / q.sum(axis=1, keepdims=True)


@pytest.mark.parametrize("impl", BACKENDS)
@pytest.mark.parametrize("r,s", [(1.5, -0.5), (2.5, 0.3), (0.3, -2.0), (5.0, -4.0),
                                 (1e-9, -1e-9), (0.5, 0.0), (60.0, 1.0)])
def test_batch_matches_cf_check(impl, r, s, rng):
    x, q = _batch(rng)
    lower, gap, upper = impl.batch_check(x, q, r, s)
    e = ExponentPair(r, s)
    for i in range(x.shape[0]):
        live = q[i] > 0
        b = cf_check(WeightedSample(x[i][live], q[i][live]), e)
        assert gap[i] == pytest.approx(b.gap, rel=1e-10, abs=1e-14)
        assert lower[i] == pytest.approx(b.lower, rel=1e-10, abs=1e-14)
        if b.upper is None:
            assert math.isnan(upper[i])
        else:
            assert upper[i] == pytest.approx(b.upper, rel=1e-12)


@pytest.mark.parametrize("impl", BACKENDS)
@pytest.mark.parametrize("x,q,upper", [
    (1.1589483034398118e-08, 1.71390843154201e-15, True),
    (8.6e7, 1 - 1e-13, False),
    (3e5, 1e-14, True),
])
def test_nearly_constant_sample(impl, x, q, upper):
    # almost all weight on one value: the two means agree to ~1e-11, so
    # both have to be taken around that value
    from cfbounds.search import mp_bound_check
    side = Side.RHS if upper else Side.LHS
    smp = normalized(WeightedSample.two_point(x, q), side)
    e = ExponentPair(2.5, -0.5)
    _, g, _ = mp_bound_check(smp, e)
    _, gap = impl.two_point_eval(x, q, e.r, e.s, upper)
    assert gap == pytest.approx(float(g), rel=1e-12)
    assert cf_check(smp, e).gap == pytest.approx(float(g), rel=1e-12)
