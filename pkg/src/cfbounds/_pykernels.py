"""Numpy implementation of the residual kernels.

Used when the compiled ``_ckernels`` extension is unavailable. Two-point
kernels use the sample ``(1, x)`` with weights ``(1 - q, q)``, rescaled so
``x_min = 1`` when ``upper`` is true and ``x_max = 1`` otherwise. Log means
are offsets from the log of the heaviest value.
"""
from __future__ import annotations

import numpy as np

OVERFLOW_EXP = 700.0


def _two_point_offset(lx, q, t, c):
    m = q * lx - c
    if t == 0.0:
        return m
    z0 = -t * c
    z1 = t * (lx - c)
    top = np.maximum(z0, z1)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        near = np.log1p((1.0 - q) * np.expm1(z0) + q * np.expm1(z1)) / t
        shifted = (top + np.log((1.0 - q) * np.exp(z0 - top) + q * np.exp(z1 - top))) / t
    out = np.where(top > OVERFLOW_EXP, shifted, near)
    tiny = np.abs(t * lx) < 1e-7
    return np.where(tiny, m + 0.5 * t * q * (1.0 - q) * lx * lx, out)


def _eval(x, q, r, s, upper):
    lx = np.log(x)
    c = np.where(q <= 0.5, 0.0, lx)
    dr = _two_point_offset(lx, q, r, c)
    ds = _two_point_offset(lx, q, s, c)
    lc = np.minimum(lx, 0.0) if upper else np.maximum(lx, 0.0)
    gap = np.exp(c + ds - lc) * np.expm1(dr - ds)
    d = (x - 1.0) / np.exp(lc)
    bound = 0.5 * (r - s) * q * (1.0 - q) * d * d
    res = bound - gap if upper else gap - bound
    return res, gap


def two_point_eval(x, q, r, s, upper):
    res, gap = _eval(np.float64(x), np.float64(q), float(r), float(s), bool(upper))
    return float(res), float(gap)


def two_point_grid(xs, qs, r, s, upper):
    x = np.asarray(xs, dtype=np.float64)[:, None]
    q = np.asarray(qs, dtype=np.float64)[None, :]
    res, gap = _eval(x, q, float(r), float(s), bool(upper))
    return (np.ascontiguousarray(np.broadcast_to(res, (x.shape[0], q.shape[1]))),
            np.ascontiguousarray(np.broadcast_to(gap, (x.shape[0], q.shape[1]))))


def _row_offset(w, u, pos, t, spread, has_zero):
    """``ln M_t - c`` per row, ``u = ln x - c`` (``-inf`` at zeros)."""
    uz = np.where(pos, u, 0.0)
    m = np.sum(w * uz, axis=1)
    if t == 0.0:
        return m
    tiny = m + 0.5 * t * np.sum(w * np.where(pos, uz - m[:, None], 0.0) ** 2, axis=1)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        z = np.where(pos, t * uz, -np.inf)
        top = np.max(z, axis=1)
        near = np.log1p(np.sum(w * np.expm1(z), axis=1)) / t
        shifted = (top + np.log(np.sum(w * np.exp(z - top[:, None]), axis=1))) / t
    out = np.where(top > OVERFLOW_EXP, shifted, near)
    return np.where((abs(t) * spread < 1e-7) & ~has_zero, tiny, out)


def batch_check(xs, qs, r, s):
    """``(lower, gap, upper)`` for each row of padded ``(m, k)`` arrays.

    Entries with zero weight are padding. ``upper`` is NaN for rows whose
    smallest value is 0.
    """
    x = np.asarray(xs, dtype=np.float64)
    q = np.asarray(qs, dtype=np.float64)
    r, s = float(r), float(s)
    live = q > 0
    pos = live & (x > 0)
    w = np.where(live, q, 0.0)
    lo = np.min(np.where(live, x, np.inf), axis=1)
    hi = np.max(np.where(live, x, 0.0), axis=1)
    has_zero = lo == 0
    with np.errstate(divide="ignore", invalid="ignore"):
        lx = np.log(x)
        ref = np.argmax(np.where(pos, q, -1.0), axis=1)
        c = np.take_along_axis(lx, ref[:, None], axis=1)[:, 0]
        lo_pos = np.min(np.where(pos, x, np.inf), axis=1)
        spread = np.log(hi) - np.log(lo_pos)
        u = lx - c[:, None]
    a = np.sum(w * x, axis=1)
    var = np.sum(w * (x - a[:, None]) ** 2, axis=1)
    dr = _row_offset(w, u, pos, r, spread, has_zero)
    ds = _row_offset(w, u, pos, s, spread, has_zero)
    with np.errstate(invalid="ignore", over="ignore"):
        gap = np.where(has_zero & (s <= 0), np.exp(c + dr),
                       np.exp(c + ds) * np.expm1(dr - ds))
        h = 0.5 * (r - s) * var
        lower = h / hi
        upper = np.where(lo > 0, h / np.where(lo > 0, lo, 1.0), np.nan)
    const = lo == hi
    return (np.where(const, 0.0, lower), np.where(const, 0.0, gap),
            np.where(const, 0.0, upper))
