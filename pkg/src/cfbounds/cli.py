"""Command-line front end.

Exit codes: 0 ok, 1 usage or input error, 2 a bound is violated (``check``),
3 search found nothing (``search``).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from cfbounds.classify import classify_lhs, classify_rhs, region_map
from cfbounds.means import (
    DEFAULT_TOL, ExponentPair, Side, WeightedSample, cf_check, is_violation,
)
from cfbounds.search import (
    Certificate, MalformedCertificate, search_counterexample, verify_certificate,
)
from cfbounds.suites import SUITES

EXIT_OK, EXIT_INPUT, EXIT_VIOLATION, EXIT_NONE = 0, 1, 2, 3
TOL_ENV = "POWERMEAN_TOL"
CSV_HEADER = ["r", "s", "rhs", "lhs", "citation_rhs", "citation_lhs"]


class InputError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    tolerance: float = DEFAULT_TOL
    budget: int = 100_000
    seed: int = 0
    output_format: str = "json"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InputError("tolerance must be positive")
        if self.budget < 1:
            raise InputError("budget must be at least 1")
        if self.output_format not in ("json", "csv", "text"):
            raise InputError(f"unknown output format {self.output_format!r}")


def fmt(x) -> str:
    if x is None:
        return "undefined"
    return format(float(x), ".17g")


def default_tol() -> float:
    raw = os.environ.get(TOL_ENV)
    if raw is None:
        return DEFAULT_TOL
    try:
        return float(raw)
    except ValueError:
        raise InputError(f"{TOL_ENV}={raw!r} is not a number") from None


def parse_sample_text(text: str) -> WeightedSample:
    """Parse ``value,weight`` lines; ``#`` starts a comment."""
    values, weights, errors = [], [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            errors.append(f"line {lineno}: expected 'value,weight'")
            continue
        try:
            v, w = float(parts[0]), float(parts[1])
        except ValueError:
            errors.append(f"line {lineno}: not a number")
            continue
        if not v >= 0:
            errors.append(f"line {lineno}: value must be nonnegative")
        if not w > 0:
            errors.append(f"line {lineno}: weight must be positive")
        values.append(v)
        weights.append(w)
    if errors:
        raise InputError("; ".join(errors))
    if not values:
        raise InputError("sample file has no data lines")
    try:
        return WeightedSample(values, weights)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def _exps(args) -> ExponentPair:
    try:
        return ExponentPair(args.r, args.s)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False)


def cmd_check(args, cfg: RunConfig) -> int:
    sample = parse_sample_text(_read_text(args.input))
    exps = _exps(args)
    b = cf_check(sample, exps)
    status = {}
    for side in Side:
        res = b.residual(side)
        if res is None:
            status[side.value] = "undefined"
        elif is_violation(res, b.gap, cfg.tolerance):
            status[side.value] = "violated"
        else:
            status[side.value] = "satisfied"
    if cfg.output_format == "json":
        print(_dump({
            "r": exps.r, "s": exps.s, "n": sample.n,
            "lower": b.lower, "gap": b.gap, "upper": b.upper,
            "lhs_residual": b.lhs_residual, "rhs_residual": b.rhs_residual,
            "lhs": status["lhs"], "rhs": status["rhs"],
        }))
    else:
        for name in ("lower", "gap", "upper", "lhs_residual", "rhs_residual"):
            print(f"{name:<13} {fmt(getattr(b, name))}")
        print(f"lhs: {status['lhs']} (lower <= gap)")
        print(f"rhs: {status['rhs']} (gap <= upper)")
    return EXIT_VIOLATION if "violated" in status.values() else EXIT_OK


def classification_report(exps: ExponentPair) -> dict:
    rhs, lhs = classify_rhs(exps), classify_lhs(exps)
    return {
        "r": exps.r, "s": exps.s,
        "rhs": rhs.verdict.value, "lhs": lhs.verdict.value,
        "citation_rhs": rhs.citation, "citation_lhs": lhs.citation,
        "detail_rhs": rhs.detail, "detail_lhs": lhs.detail,
        "passed_rhs": list(rhs.passed), "passed_lhs": list(lhs.passed),
    }


def cmd_classify(args, cfg: RunConfig) -> int:
    rep = classification_report(_exps(args))
    if cfg.output_format == "text":
        for side in ("rhs", "lhs"):
            print(f"{side}: {rep[side]} [{rep['citation_' + side] or '-'}] "
                  f"{rep['detail_' + side]}")
    else:
        print(_dump(rep))
    return EXIT_OK


def region_csv(cells) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in cells:
        if c.degenerate:
            w.writerow([fmt(c.r), fmt(c.s), "degenerate", "degenerate", "", ""])
        else:
            w.writerow([fmt(c.r), fmt(c.s), c.rhs.verdict.value, c.lhs.verdict.value,
                        c.rhs.citation or "", c.lhs.citation or ""])
    return buf.getvalue()


def cmd_region_map(args, cfg: RunConfig) -> int:
    if args.grid < 2:
        raise InputError("--grid must be at least 2")
    cells = region_map((args.r_min, args.r_max), (args.s_min, args.s_max),
                       args.grid, workers=args.workers)
    text = region_csv(cells)
    if args.out == "-":
        sys.stdout.write(text)
    else:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            raise InputError(f"cannot write {args.out}: {exc.strerror}") from None
        print(f"wrote {len(cells)} cells to {args.out}")
    return EXIT_OK


def cmd_search(args, cfg: RunConfig) -> int:
    exps = _exps(args)
    cert = search_counterexample(exps, Side(args.side), budget=cfg.budget,
                                 seed=cfg.seed, tol=cfg.tolerance)
    text = "none" if cert is None else _dump(cert.to_dict())
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    print(text)
    return EXIT_NONE if cert is None else EXIT_OK


def cmd_verify_certificate(args, cfg: RunConfig) -> int:
    raw = _read_text(args.input)
    try:
        cert = Certificate.from_dict(json.loads(raw))
    except (json.JSONDecodeError, AttributeError, MalformedCertificate) as exc:
        raise InputError(f"malformed certificate: {exc}") from None
    ok = verify_certificate(cert, tol=cfg.tolerance)
    print("true" if ok else "false")
    return EXIT_OK if ok else EXIT_INPUT


def cmd_verify(args, cfg: RunConfig) -> int:
    if args.suite not in SUITES:
        raise InputError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)}")
    outcomes = SUITES[args.suite](seed=cfg.seed)
    for o in outcomes:
        mark = "PASS" if o.ok else "FAIL"
        print(f"{mark}  {o.name}: {o.passed}/{o.total}")
    return EXIT_OK if all(o.ok for o in outcomes) else EXIT_INPUT


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cfbounds",
                description="Evaluate, classify and search for violations of variance "
                            "bounds on differences of weighted power means.",
                epilog="exit codes: 0 ok, 1 usage/input error, 2 bound violated (check), "
                       "3 nothing found (search)")
    p.add_argument("--tol", type=float, default=None,
                   help=f"violation tolerance (default ${TOL_ENV} or {DEFAULT_TOL})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def exps_args(sp):
        sp.add_argument("--r", type=float, required=True)
        sp.add_argument("--s", type=float, required=True)

    sp = sub.add_parser("check", help="evaluate both bounds for a sample file")
    sp.add_argument("--input", required=True, help="'value,weight' lines, or - for stdin")
    exps_args(sp)
    sp.add_argument("--format", choices=["text", "json"], default="text")
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("classify", help="verdict for each side at (r, s)")
    exps_args(sp)
    sp.add_argument("--format", choices=["json", "text"], default="json")
    sp.set_defaults(func=cmd_classify)

    sp = sub.add_parser("region-map", help="classify a grid of (r, s) into CSV")
    for name in ("--r-min", "--r-max", "--s-min", "--s-max"):
        sp.add_argument(name, type=float, required=True)
    sp.add_argument("--grid", type=int, required=True)
    sp.add_argument("--out", required=True, help="CSV path, or - for stdout")
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_region_map, format="csv")

    sp = sub.add_parser("search", help="search for a two-point counterexample")
    exps_args(sp)
    sp.add_argument("--side", choices=["lhs", "rhs"], required=True)
    sp.add_argument("--budget", type=int, default=100_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", default=None, help="also write the result here")
    sp.set_defaults(func=cmd_search, format="json")

    sp = sub.add_parser("verify-certificate", help="re-check a certificate JSON at high precision")
    sp.add_argument("--input", required=True, help="certificate JSON, or - for stdin")
    sp.set_defaults(func=cmd_verify_certificate, format="json")

    sp = sub.add_parser("verify", help="run a property suite")
    sp.add_argument("--suite", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify, format="text")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        tol = args.tol if args.tol is not None else default_tol()
        cfg = RunConfig(tolerance=tol,
                        budget=getattr(args, "budget", 100_000),
                        seed=getattr(args, "seed", 0),
                        output_format=args.format)
        return args.func(args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
