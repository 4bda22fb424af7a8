"""Benchmark the compiled kernel lane against the pure-Python fallback.

Run with ``python -m walshbo.bench``.  Times the max-flow cut kernel, the
exhaustive BQP scan, and a full relaxation solve on random instances, and
checks that both lanes agree.
"""

from __future__ import annotations

import time

import numpy as np

from . import _kernels
from .afo import BqpProblem, bqp_value, graphcut_minimize, submodular_relaxation_solve


def random_bqp(n, rng, submodular=False):
    quad = np.triu(rng.normal(size=(n, n)), 1)
    if submodular:
        quad = -np.abs(quad)
    return BqpProblem(n=n, constant=float(rng.normal()),
                      linear=rng.normal(size=n), quadratic=quad)


def _time(fn, repeats):
    t0 = time.perf_counter()
    out = None
    for _ in range(repeats):
        out = fn()
    return (time.perf_counter() - t0) / repeats, out


def _with_lane(lane, fn):
    saved = (_kernels.maxflow_mincut, _kernels.bqp_scan)
    _kernels.maxflow_mincut = lane.maxflow_mincut
    _kernels.bqp_scan = lane.bqp_scan
    try:
        return fn()
    finally:
        _kernels.maxflow_mincut, _kernels.bqp_scan = saved


def main():
    if _kernels.native is None:
        print("compiled kernels not built; nothing to compare")
        return
    rng = np.random.default_rng(7)
    rows = []

    for n in (20, 40, 60):
        problem = random_bqp(n, rng, submodular=True)
        cut = lambda: graphcut_minimize(problem)  # noqa: E731
        t_native, out_n = _with_lane(_kernels.native, lambda: _time(cut, 50))
        t_pure, out_p = _with_lane(_kernels.pure, lambda: _time(cut, 50))
        assert np.array_equal(out_n[0], out_p[0])
        rows.append((f"graph cut n={n}", t_native, t_pure))

    for n in (14, 16, 18):
        problem = random_bqp(n, rng)
        scan = lambda: _kernels.bqp_scan(  # noqa: E731
            problem.constant, problem.linear, problem.quadratic)
        t_native, out_n = _with_lane(_kernels.native, lambda: _time(scan, 3))
        t_pure, out_p = _with_lane(_kernels.pure, lambda: _time(scan, 3))
        assert out_n[0] == out_p[0]
        rows.append((f"exhaustive scan n={n}", t_native, t_pure))

    for n in (30, 50):
        problem = random_bqp(n, rng)
        solve = lambda: submodular_relaxation_solve(problem)  # noqa: E731
        t_native, out_n = _with_lane(_kernels.native, lambda: _time(solve, 10))
        t_pure, out_p = _with_lane(_kernels.pure, lambda: _time(solve, 10))
        assert bqp_value(problem, out_n[0]) == bqp_value(problem, out_p[0])
        rows.append((f"relaxation solve n={n}", t_native, t_pure))

    width = max(len(r[0]) for r in rows)
    print(f"{'kernel':<{width}}  {'native':>10}  {'pure':>10}  {'speedup':>8}")
    for name, tn, tp in rows:
        print(f"{name:<{width}}  {tn * 1e3:>8.3f}ms  {tp * 1e3:>8.3f}ms  "
              f"{tp / tn:>7.1f}x")


if __name__ == "__main__":
    main()
