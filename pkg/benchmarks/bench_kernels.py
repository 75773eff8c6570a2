"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N] [--grid N] [--batch M]

Prints the best-of-N wall time per kernel and backend, end-to-end search
times with each backend, and the largest disagreement between the backends
on the same inputs.
"""
import argparse
import sys
import timeit

import numpy as np

from cfbounds import _pykernels, kernels
from cfbounds.search import search_counterexample

try:
    from cfbounds import _ckernels
except ImportError:
    _ckernels = None


def _grid_inputs(n):
    xs = np.geomspace(1e-8, 1e8, n)
    qs = 1.0 / (1.0 + np.exp(-np.linspace(-34.0, 34.0, n)))
    return xs, qs


def _batch_inputs(m, k=8, seed=0):
    rng = np.random.default_rng(seed)
    x = rng.uniform(1e-3, 10.0, (m, k))
    n = rng.integers(1, k + 1, m)
    g = rng.gamma(1.0, size=(m, k))
    g[np.arange(k)[None, :] >= n[:, None]] = 0.0
    return x, g / g.sum(axis=1, keepdims=True)


def best_time(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--grid", type=int, default=1000, help="side of the two-point grid")
    p.add_argument("--batch", type=int, default=100_000, help="samples for batch_check")
    p.add_argument("--r", type=float, default=2.5)
    p.add_argument("--s", type=float, default=-0.5)
    args = p.parse_args(argv)

    backends = [("python", _pykernels)]
    if _ckernels is None:
        print("compiled extension not built; timing the numpy fallback only",
              file=sys.stderr)
    else:
        backends.append(("cython", _ckernels))

    xs, qs = _grid_inputs(args.grid)
    bx, bq = _batch_inputs(args.batch)
    cases = [
        (f"two_point_grid {args.grid}x{args.grid}",
         lambda m: m.two_point_grid(xs, qs, args.r, args.s, True)),
        (f"batch_check {args.batch}x8",
         lambda m: m.batch_check(bx, bq, args.r, args.s)),
        ("two_point_eval x1000",
         lambda m: [m.two_point_eval(float(x), 0.3, args.r, args.s, True) for x in xs[:1000]]),
    ]

    print(f"{'kernel':<28}" + "".join(f"{name:>12}" for name, _ in backends) + f"{'speedup':>10}")
    for label, call in cases:
        times = [best_time(lambda m=m: call(m), args.repeat) for _, m in backends]
        row = f"{label:<28}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    # full searches on pairs where nothing is found, so the budget is spent
    print()
    print(f"{'search, budget 1e5':<28}" + "".join(f"{name:>12}" for name, _ in backends))
    for exps, side in (((1.0, 0.0), "rhs"), ((2.5, 0.3), "lhs")):
        times = []
        for _, m in backends:
            kernels.two_point_eval, kernels.two_point_grid = m.two_point_eval, m.two_point_grid
            times.append(best_time(lambda: search_counterexample(exps, side), args.repeat))
        print(f"{str(exps) + ' ' + side:<28}" + "".join(f"{t * 1e3:>10.2f}ms" for t in times))
    print()

    if _ckernels is not None:
        a = _pykernels.two_point_grid(xs, qs, args.r, args.s, True)[1]
        b = _ckernels.two_point_grid(xs, qs, args.r, args.s, True)[1]
        scale = np.maximum(1.0, np.abs(a))
        print(f"max |gap difference| / max(1,|gap|) on grid: {np.nanmax(np.abs(a - b) / scale):.3g}")
        a = _pykernels.batch_check(bx, bq, args.r, args.s)[1]
        b = _ckernels.batch_check(bx, bq, args.r, args.s)[1]
        print(f"max |gap difference| on batch: {np.max(np.abs(a - b)):.3g}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
