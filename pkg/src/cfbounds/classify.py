"""Verdicts for each side of the difference-of-means bound as a function of
the exponent pair ``(r, s)``.

FAILS verdicts only ever come from necessary conditions; a numerical search
that finds nothing never turns into a verdict.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from cfbounds import lab
from cfbounds.means import ExponentPair, Side

C_SIGN_TOL = 1e-12


class Verdict(str, Enum):
    HOLDS = "HOLDS"
    FAILS = "FAILS"
    UNKNOWN = "UNKNOWN"


CITATIONS = (
    "thm1-rhs", "thm1-lhs", "lem0", "lem1-necessary", "eq2.2",
    "remark-s>=-4", "thm3-a", "thm3-b",
)


@dataclass(frozen=True)
class Classification:
    side: Side
    verdict: Verdict
    citation: Optional[str]
    detail: str
    passed: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.verdict is not Verdict.UNKNOWN and self.citation is None:
            raise ValueError("HOLDS/FAILS verdicts need a citation")
        if self.citation is not None and self.citation not in CITATIONS:
            raise ValueError(f"unknown citation {self.citation!r}")

    def to_dict(self) -> dict:
        return {
            "side": self.side.value,
            "verdict": self.verdict.value,
            "citation": self.citation,
            "detail": self.detail,
            "passed": list(self.passed),
        }


def _pair(exps) -> ExponentPair:
    if isinstance(exps, ExponentPair):
        return exps
    r, s = exps
    return ExponentPair(r, s)


def _first_failure(checks) -> Optional[str]:
    for name, ok in checks:
        if not ok:
            return name
    return None


def classify_rhs(exps) -> Classification:
    """Upper bound ``gap <= (r-s) var / (2 x_min)``.

    Holds exactly when ``0 <= r+s <= 3``, ``r <= 2`` and ``s >= -1``.
    """
    e = _pair(exps)
    r, s = e.r, e.s
    checks = [
        ("r+s>=0", r + s >= 0),
        ("r+s<=3", r + s <= 3),
        ("r<=2", r <= 2),
        ("s>=-1", s >= -1),
    ]
    cite = "lem0" if s == 0 else "thm1-rhs"
    bad = _first_failure(checks)
    if bad is None:
        return Classification(Side.RHS, Verdict.HOLDS, cite,
                              "0<=r+s<=3, r<=2, s>=-1")
    return Classification(Side.RHS, Verdict.FAILS, cite, f"violates {bad}")


def lhs_necessary_checks(e: ExponentPair) -> list[tuple[str, str, bool]]:
    """Necessary conditions for the lower bound in fixed priority order, as
    ``(name, citation, satisfied)``."""
    r, s = e.r, e.s
    out = [
        ("r>=1", "lem1-necessary", r >= 1),
        ("r+s>=0", "lem1-necessary", r + s >= 0),
        ("r+s<=3", "lem1-necessary", r + s <= 3),
        ("rs<=2", "lem1-necessary", r * s <= 2),
        ("s>=-4", "remark-s>=-4", s >= -4),
    ]
    if s < 0 and r >= 1:
        out.append(("(r-s)/2<=B(r)", "eq2.2",
                    e.half_diff <= lab.cf_necessary_bound(r)))
    return out


def thm3_second_branch(r: float, s: float) -> bool:
    return (-1 < s < -0.5 and 2 < r < 3 - s
            and lab.c_max(r, s) <= C_SIGN_TOL)


def classify_lhs(exps) -> Classification:
    """Lower bound ``gap >= (r-s) var / (2 x_max)``."""
    e = _pair(exps)
    r, s = e.r, e.s
    if -0.5 <= s <= 1:
        checks = [("r>=1", r >= 1), ("r+s>=0", r + s >= 0), ("r+s<=3", r + s <= 3)]
        cite = "lem0" if s == 0 else "thm1-lhs"
        bad = _first_failure(checks)
        if bad is None:
            return Classification(Side.LHS, Verdict.HOLDS, cite,
                                  "-1/2<=s<=1, 0<=r+s<=3, r>=1")
        return Classification(Side.LHS, Verdict.FAILS, cite, f"violates {bad}")

    passed = []
    for name, cite, ok in lhs_necessary_checks(e):
        if not ok:
            return Classification(Side.LHS, Verdict.FAILS, cite, f"violates {name}")
        passed.append(name)
    passed_t = tuple(passed)
    if (r - 1) * (r - 2) <= 1 - s * s:
        return Classification(Side.LHS, Verdict.HOLDS, "thm3-a",
                              "(r-1)(r-2)<=1-s^2", passed_t)
    if thm3_second_branch(r, s):
        return Classification(Side.LHS, Verdict.HOLDS, "thm3-b",
                              "-1<s<-1/2, 2<r<3-s, max c1..c4<=0", passed_t)
    return Classification(Side.LHS, Verdict.UNKNOWN, None,
                          "necessary conditions pass; no sufficient condition applies",
                          passed_t)


def classify(exps, side: Side) -> Classification:
    return classify_rhs(exps) if Side(side) is Side.RHS else classify_lhs(exps)


@dataclass(frozen=True)
class RegionCell:
    r: float
    s: float
    rhs: Optional[Classification]
    lhs: Optional[Classification]

    @property
    def degenerate(self) -> bool:
        return self.rhs is None


def _classify_row(args) -> list[RegionCell]:
    s, rs = args
    row = []
    for r in rs:
        if r <= s:
            row.append(RegionCell(r, s, None, None))
        else:
            e = ExponentPair(r, s)
            row.append(RegionCell(r, s, classify_rhs(e), classify_lhs(e)))
    return row


def region_map(r_range, s_range, grid_n: int, workers: int = 1) -> list[RegionCell]:
    """Classify every cell of a ``grid_n x grid_n`` grid, ``s`` outer and ``r``
    inner. Output order does not depend on ``workers``."""
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    r_lo, r_hi = map(float, r_range)
    s_lo, s_hi = map(float, s_range)
    if not all(np.isfinite([r_lo, r_hi, s_lo, s_hi])):
        raise ValueError("ranges must be finite")
    rs = np.linspace(r_lo, r_hi, grid_n).tolist()
    ss = np.linspace(s_lo, s_hi, grid_n).tolist()
    jobs = [(s, rs) for s in ss]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_classify_row, jobs, chunksize=8))
    else:
        rows = [_classify_row(j) for j in jobs]
    return [cell for row in rows for cell in row]
