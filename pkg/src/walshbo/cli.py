"""Command-line front end: validate configs, run repeated experiments.

Experiments are described by a single flat JSON document.  A run writes one
CSV per repeat, a summary CSV (per-iteration mean and standard error of the
best value so far) and a JSON manifest.  All CSV content is deterministic
for a fixed config; real wall-clock timings live in the manifest (per-record
timings can be opted into the CSVs at the cost of byte-reproducibility).

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy

from . import __version__, _kernels
from .benchmarks import (ising_benchmark, labs_benchmark, load_tabular,
                         make_ising, tabular_benchmark, worst_decile_points)
from .driver import AFO_SOLVERS, DEDUPE_POLICIES, RunConfig, run_bo
from .errors import RunAbortedError
from .surrogate import HyperConfig

BENCHMARKS = ("labs", "ising", "tabular")
INIT_STRATEGIES = ("uniform", "worst_decile")

CSV_COLUMNS = ("run_id", "iteration", "batch_id", "point_bits", "objective",
               "best_so_far", "batch_diversity", "wall_time_s")
SUMMARY_COLUMNS = ("iteration", "mean_best_so_far", "stderr_best_so_far")


@dataclass
class ExperimentConfig:
    """Flat experiment description; see README for the JSON schema."""

    benchmark: str = "labs"
    budget: int = 30
    init_count: int = 5
    batch_size: int = 1
    max_order: int = 2
    afo: str = "submodular_relaxation"
    relaxation_iterations: int = 5
    relaxation_step: float = 0.2
    local_search_restarts: int = 20
    dedupe_policy: str = "resample"
    sparsity: object = None
    refit_period: int = 1
    seed: int = 0
    repeats: int = 1
    output_dir: str = "results"
    threads: int = 1
    labs_n: int = 20
    ising_seed: int = 0
    ising_lambda: float = 0.0
    tabular_path: str | None = None
    tabular_sign: int = 1
    tabular_alphabet: str | None = None
    init_strategy: str = "uniform"
    include_wall_times: bool = False
    hyper_beta_grid: list | None = None
    hyper_noise_grid: list | None = None

    def problems(self):
        """All invariant violations, each naming the offending field."""
        out = []
        if self.benchmark not in BENCHMARKS:
            out.append(f"benchmark: unknown benchmark {self.benchmark!r}")
        if self.init_count < 1:
            out.append("init_count: must be >= 1")
        if self.budget < self.init_count:
            out.append("budget: must be >= init_count")
        if self.batch_size < 1:
            out.append("batch_size: must be >= 1")
        if self.repeats < 1:
            out.append("repeats: must be >= 1")
        if self.afo not in AFO_SOLVERS:
            out.append(f"afo: unknown solver {self.afo!r}")
        elif self.afo != "local_search" and self.max_order != 2:
            out.append(f"max_order: solver {self.afo!r} requires max_order == 2")
        if self.dedupe_policy not in DEDUPE_POLICIES:
            out.append(f"dedupe_policy: unknown policy {self.dedupe_policy!r}")
        if self.relaxation_iterations < 1:
            out.append("relaxation_iterations: must be >= 1")
        if self.refit_period < 1:
            out.append("refit_period: must be >= 1")
        if self.threads < 1:
            out.append("threads: must be >= 1")
        if self.benchmark == "labs" and self.labs_n < 2:
            out.append("labs_n: must be >= 2")
        if self.benchmark == "ising" and self.ising_lambda < 0:
            out.append("ising_lambda: must be >= 0")
        if self.benchmark == "tabular" and not self.tabular_path:
            out.append("tabular_path: required for the tabular benchmark")
        if self.tabular_sign not in (1, -1):
            out.append("tabular_sign: must be +1 or -1")
        if self.init_strategy not in INIT_STRATEGIES:
            out.append(f"init_strategy: unknown strategy {self.init_strategy!r}")
        if self.init_strategy == "worst_decile" and self.benchmark != "tabular":
            out.append("init_strategy: worst_decile requires the tabular benchmark")
        if not isinstance(self.sparsity, (type(None), bool, str, list)):
            out.append("sparsity: must be null, a bool, 'shared', or a list")
        if isinstance(self.sparsity, str) and self.sparsity != "shared":
            out.append(f"sparsity: unknown mode {self.sparsity!r}")
        return out


def load_config(path):
    """Parse a config file; returns (config, problems)."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        return None, [f"{path}: {exc}"]
    known = {f.name for f in fields(ExperimentConfig)}
    problems = [f"{key}: unknown configuration field" for key in raw
                if key not in known]
    cfg = ExperimentConfig(**{k: v for k, v in raw.items() if k in known})
    problems.extend(cfg.problems())
    return cfg, problems


def validate_config(path):
    """Print one line per violation; exit status 0 iff the file is valid."""
    cfg, problems = load_config(path)
    if problems:
        for p in problems:
            print(f"invalid: {p}")
        return 1
    print("ok")
    return 0


def _format(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _build_objective_factory(cfg, out_dir):
    """Returns (factory(), extras) where factory makes a fresh objective."""
    if cfg.benchmark == "labs":
        return lambda: labs_benchmark(cfg.labs_n), None
    if cfg.benchmark == "ising":
        spec = make_ising(cfg.ising_seed, cfg.ising_lambda)
        spec.save(out_dir / "ising_spec.json")
        return lambda: ising_benchmark(spec), None
    spec = load_tabular(cfg.tabular_path, sign=cfg.tabular_sign,
                        alphabet=cfg.tabular_alphabet)
    return lambda: tabular_benchmark(spec), spec


def _hyper(cfg):
    kwargs = {}
    if cfg.hyper_beta_grid is not None:
        kwargs["beta_grid"] = np.asarray(cfg.hyper_beta_grid, dtype=float)
    if cfg.hyper_noise_grid is not None:
        kwargs["noise_grid"] = np.asarray(cfg.hyper_noise_grid, dtype=float)
    return HyperConfig(**kwargs)


def _sparsity(cfg):
    if cfg.sparsity is True:
        return "shared"
    if cfg.sparsity is False:
        return None
    return cfg.sparsity


def write_run_csv(path, run_id, history, include_wall_times):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in history.records:
            diversity = history.batch_diversity.get(rec.batch_id)
            wall = rec.wall_time if include_wall_times else 0.0
            writer.writerow([
                run_id, rec.iteration, rec.batch_id,
                "".join(str(int(b)) for b in rec.point),
                _format(rec.objective), _format(rec.best_so_far),
                _format(diversity), _format(wall),
            ])


def write_summary_csv(path, histories):
    rows = np.stack([h.best_values() for h in histories])
    repeats = rows.shape[0]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_COLUMNS)
        for i in range(rows.shape[1]):
            mean = float(rows[:, i].mean())
            stderr = (float(rows[:, i].std(ddof=1)) / math.sqrt(repeats)
                      if repeats > 1 else 0.0)
            writer.writerow([i + 1, _format(mean), _format(stderr)])


def run_experiment(cfg):
    """Execute all repeats; write CSVs and a manifest. Returns exit status."""
    problems = cfg.problems()
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return 1

    t_start = time.perf_counter()
    out_dir = Path(cfg.output_dir)
    runs_dir = out_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    try:
        factory, tabular_spec = _build_objective_factory(cfg, out_dir)
    except Exception as exc:
        print(f"invalid: benchmark: {exc}", file=sys.stderr)
        return 1

    master = np.random.SeedSequence(cfg.seed)
    children = master.spawn(cfg.repeats)
    histories, run_meta = [], []
    failed = 0
    for run_id, run_ss in enumerate(children):
        bench_ss, driver_ss = run_ss.spawn(2)
        init_points = None
        if cfg.init_strategy == "worst_decile":
            init_points = worst_decile_points(
                tabular_spec, cfg.init_count, np.random.default_rng(bench_ss))
        run_cfg = RunConfig(
            objective=factory(), budget=cfg.budget, init_count=cfg.init_count,
            batch_size=cfg.batch_size, max_order=cfg.max_order, afo=cfg.afo,
            relaxation_iterations=cfg.relaxation_iterations,
            relaxation_step=cfg.relaxation_step,
            local_search_restarts=cfg.local_search_restarts, seed=driver_ss,
            dedupe_policy=cfg.dedupe_policy, hyper=_hyper(cfg),
            sparsity=_sparsity(cfg), refit_period=cfg.refit_period,
            threads=cfg.threads, init_points=init_points)
        t0 = time.perf_counter()
        status, message, history = "ok", "", None
        try:
            history = run_bo(run_cfg)
            histories.append(history)
        except RunAbortedError as exc:
            status, message, history = "aborted", str(exc), exc.history
            failed += 1
        except Exception as exc:
            status, message = "failed", str(exc)
            failed += 1
        wall = time.perf_counter() - t0
        if history is not None:
            write_run_csv(runs_dir / f"run_{run_id:03d}.csv", run_id, history,
                          cfg.include_wall_times)
        run_meta.append({
            "run_id": run_id,
            "seed": {"entropy": cfg.seed, "spawn_key": list(run_ss.spawn_key)},
            "status": status,
            "message": message,
            "evaluations": history.size if history is not None else 0,
            "wall_time_s": wall,
        })

    if histories and all(h.size == cfg.budget for h in histories):
        write_summary_csv(out_dir / "summary.csv", histories)

    manifest = {
        "config": asdict(cfg),
        "versions": {
            "python": sys.version.split()[0],
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "walshbo": __version__,
            "kernel_backend": _kernels.backend(),
        },
        "runs": run_meta,
        "total_wall_time_s": time.perf_counter() - t_start,
    }
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return 2 if failed else 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="walshbo",
        description="Combinatorial Bayesian optimization experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment from a JSON config")
    p_run.add_argument("config")
    p_run.add_argument("--output-dir", help="override output_dir")
    p_run.add_argument("--seed", type=int, help="override master seed")
    p_run.add_argument("--repeats", type=int, help="override repeat count")
    p_val = sub.add_parser("validate", help="check a JSON config")
    p_val.add_argument("config")
    args = parser.parse_args(argv)

    if args.command == "validate":
        return validate_config(args.config)

    cfg, problems = load_config(args.config)
    if problems:
        for p in problems:
            print(f"invalid: {p}", file=sys.stderr)
        return 1
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    if args.seed is not None:
        cfg.seed = args.seed
    if args.repeats is not None:
        cfg.repeats = args.repeats
    env_threads = os.environ.get("WALSHBO_THREADS")
    if env_threads:
        cfg.threads = max(1, int(env_threads))
    try:
        return run_experiment(cfg)
    except Exception as exc:  # runtime failure outside per-run handling
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
