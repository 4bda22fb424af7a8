"""Bayesian-optimization loop: fit, Thompson-sample, solve, evaluate, record.

Sequential and batch modes share one code path; a batch of size B draws B
independent posterior samples per round and solves each acquisition problem
independently (optionally on a thread pool), so batch size 1 reproduces the
sequential trajectory exactly.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .afo import (brute_force_minimize, build_bqp, local_search_minimize,
                  submodular_relaxation_solve, theta_objective)
from .errors import ConfigurationError, ExhaustedSpaceError, RunAbortedError
from .features import enumerate_subsets
from .surrogate import (HyperConfig, TrainingSet, fit_hyperparameters,
                        fit_posterior, fit_shared_prior_scale,
                        hierarchical_prior_scales, sample_theta)

AFO_SOLVERS = ("submodular_relaxation", "local_search", "brute_force")
DEDUPE_POLICIES = ("allow", "resample", "forbid")
MAX_RESAMPLES = 10


@dataclass
class RunConfig:
    """Everything one optimization run needs besides the objective itself."""

    objective: object
    budget: int
    init_count: int = 5
    batch_size: int = 1
    max_order: int = 2
    afo: str = "submodular_relaxation"
    relaxation_iterations: int = 5
    relaxation_step: float = 0.2
    local_search_restarts: int = 20
    seed: object = 0
    dedupe_policy: str = "resample"
    hyper: HyperConfig = field(default_factory=HyperConfig)
    sparsity: object = None  # None | "shared" | per-dimension scales
    center_outputs: bool = True
    refit_period: int = 1
    threads: int = 1
    init_points: np.ndarray | None = None

    def validate(self):
        n = self.objective.dimension
        if self.init_count < 1:
            raise ConfigurationError("init_count must be >= 1")
        if self.budget < self.init_count:
            raise ConfigurationError("budget must be >= init_count")
        if self.batch_size < 1:
            raise ConfigurationError("batch_size must be >= 1")
        if self.afo not in AFO_SOLVERS:
            raise ConfigurationError(f"unknown AFO solver {self.afo!r}")
        if self.dedupe_policy not in DEDUPE_POLICIES:
            raise ConfigurationError(f"unknown dedupe policy {self.dedupe_policy!r}")
        if not 0 <= self.max_order <= n:
            raise ConfigurationError(f"max_order must lie in [0, {n}]")
        if self.afo in ("submodular_relaxation", "brute_force") and self.max_order != 2:
            raise ConfigurationError(
                f"AFO solver {self.afo!r} requires max_order == 2")
        if self.refit_period < 1:
            raise ConfigurationError("refit_period must be >= 1")
        if self.init_points is not None and len(self.init_points) != self.init_count:
            raise ConfigurationError("init_points length must equal init_count")


@dataclass
class EvalRecord:
    iteration: int
    point: np.ndarray
    objective: float
    best_so_far: float
    batch_id: int
    wall_time: float


@dataclass
class RunHistory:
    """Per-evaluation records plus per-batch diversity."""

    dimension: int
    records: list = field(default_factory=list)
    batch_diversity: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def size(self):
        return len(self.records)

    def best(self):
        rec = min(self.records, key=lambda r: r.objective)
        return rec.point, rec.objective

    def best_values(self):
        return np.array([r.best_so_far for r in self.records])

    def content_rows(self):
        """Canonical rows for determinism comparisons (wall time excluded)."""
        return [(r.iteration, r.batch_id, "".join(map(str, r.point.tolist())),
                 r.objective, r.best_so_far) for r in self.records]


def batch_diversity(points):
    """Mean Hamming distance over all unordered pairs of points."""
    pts = np.atleast_2d(np.asarray(points))
    m = pts.shape[0]
    if m < 2:
        raise ConfigurationError("diversity needs at least two points")
    diffs = (pts[:, None, :] != pts[None, :, :]).sum(axis=2)
    iu = np.triu_indices(m, 1)
    return float(diffs[iu].mean())


def _point_key(x):
    return np.asarray(x, dtype=np.int8).tobytes()


def _propose(model, basis, cfg, theta_seed, solver_seed):
    """One acquisition solve from one posterior draw; returns (x, theta)."""
    theta = sample_theta(model, theta_seed)
    if cfg.afo == "local_search":
        x, _ = local_search_minimize(theta, basis,
                                     restarts=cfg.local_search_restarts,
                                     rng_seed=solver_seed)
    else:
        problem = build_bqp(theta, basis)
        if cfg.afo == "brute_force":
            x, _ = brute_force_minimize(problem)
        else:
            x, _, _ = submodular_relaxation_solve(
                problem, iterations=cfg.relaxation_iterations,
                step=cfg.relaxation_step, rng_seed=solver_seed)
    return x, theta


def _first_unevaluated(n, taken, rng):
    if len(taken) >= (1 << n):
        raise ExhaustedSpaceError(f"all 2^{n} points already evaluated")
    if n <= 22:
        shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
        for code in range(1 << n):
            x = ((code >> shifts) & 1).astype(np.int8)
            if _point_key(x) not in taken:
                return x
    while True:
        x = rng.integers(0, 2, size=n).astype(np.int8)
        if _point_key(x) not in taken:
            return x


def _dedupe(candidate, theta, model, basis, cfg, taken, seeds, rng):
    """Apply the dedupe policy to a proposed candidate.

    ``resample`` draws up to MAX_RESAMPLES fresh posterior samples, then
    falls back to the best unevaluated bit-flip neighbor of the candidate
    under the last sample (and finally allows the duplicate).  ``forbid``
    does the same but guarantees an unevaluated point or raises once the
    space is exhausted.
    """
    if cfg.dedupe_policy == "allow" or _point_key(candidate) not in taken:
        return candidate
    for attempt in range(1, MAX_RESAMPLES + 1):
        candidate, theta = _propose(model, basis, cfg,
                                    seeds[attempt][0], seeds[attempt][1])
        if _point_key(candidate) not in taken:
            return candidate
    neighbors = np.tile(candidate, (cfg.objective.dimension, 1))
    for i in range(neighbors.shape[0]):
        neighbors[i, i] ^= 1
    fresh = [i for i in range(neighbors.shape[0])
             if _point_key(neighbors[i]) not in taken]
    if fresh:
        values = theta_objective(theta, basis, neighbors[fresh])
        return neighbors[fresh[int(np.argmin(values))]]
    if cfg.dedupe_policy == "resample":
        return candidate
    return _first_unevaluated(cfg.objective.dimension, taken, rng)


def select_next(model, cfg, rng, evaluated=()):
    """Sample-and-solve selection of one point, deduplicated per policy.

    ``rng`` is a numpy Generator used to derive the draw seeds;
    ``evaluated`` lists the points the dedupe policy must avoid.
    """
    taken = {_point_key(p) for p in evaluated}
    return _select_next(model, model.basis, cfg, rng, taken)


def _select_next(model, basis, cfg, rng, taken):
    seeds = rng.integers(0, 2 ** 63, size=(MAX_RESAMPLES + 1, 2))
    candidate, theta = _propose(model, basis, cfg, seeds[0][0], seeds[0][1])
    return _dedupe(candidate, theta, model, basis, cfg, taken, seeds, rng)


def _fit_model(points, outputs, parity_basis, parity_rows, cfg):
    y = np.asarray(outputs, dtype=np.float64)
    if cfg.center_outputs:
        # selection is shift-invariant; centering keeps the evidence grid
        # from explaining the output mean as variance
        y = y - y.mean()
    train = TrainingSet(points=np.asarray(points, dtype=np.int8),
                        outputs=y,
                        basis=parity_basis,
                        parity=np.asarray(parity_rows),
                        features=np.asarray(parity_rows) * parity_basis.weights)
    beta, noise = fit_hyperparameters(train, cfg.hyper)
    basis = parity_basis.with_beta(beta)
    train = TrainingSet(points=train.points, outputs=train.outputs,
                        basis=basis, parity=train.parity,
                        features=train.parity * basis.weights)
    scales = None
    if cfg.sparsity is not None and cfg.sparsity is not False:
        if isinstance(cfg.sparsity, str):
            if cfg.sparsity != "shared":
                raise ConfigurationError(f"unknown sparsity mode {cfg.sparsity!r}")
            shared = fit_shared_prior_scale(train, beta, noise)
            scales = hierarchical_prior_scales(basis, shared)
        else:
            scales = hierarchical_prior_scales(basis, cfg.sparsity)
    model = fit_posterior(train, noise, prior_scales=scales)
    return model, basis


def run_bo(cfg):
    """Run the full loop; returns a RunHistory with one record per evaluation.

    A failing objective evaluation raises RunAbortedError carrying the
    partial history.
    """
    cfg.validate()
    n = cfg.objective.dimension
    seed = cfg.seed
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    init_ss, select_ss = ss.spawn(2)
    rng = np.random.default_rng(init_ss)

    history = RunHistory(dimension=n, meta={"afo": cfg.afo,
                                            "batch_size": cfg.batch_size})
    taken = set()
    points, outputs, parity_rows = [], [], []
    parity_basis = enumerate_subsets(n, cfg.max_order, beta=1.0)
    best = np.inf

    def evaluate(x, batch_id):
        nonlocal best
        t0 = time.perf_counter()
        try:
            value = cfg.objective(x)
        except Exception as exc:
            raise RunAbortedError(f"objective evaluation failed: {exc}",
                                  history=history) from exc
        wall = time.perf_counter() - t0
        best = min(best, value)
        history.records.append(EvalRecord(
            iteration=len(history.records) + 1, point=np.array(x, dtype=np.int8),
            objective=value, best_so_far=best, batch_id=batch_id,
            wall_time=wall))
        taken.add(_point_key(x))
        points.append(np.asarray(x, dtype=np.int8))
        outputs.append(value)
        parity_rows.append((1.0 - 2.0 * ((parity_basis.mask @ np.asarray(
            x, dtype=np.int64)) & 1)))

    if cfg.init_points is not None:
        inits = [np.asarray(p, dtype=np.int8) for p in cfg.init_points]
    else:
        inits = []
        while len(inits) < cfg.init_count:
            x = rng.integers(0, 2, size=n).astype(np.int8)
            if cfg.dedupe_policy == "forbid" and any(
                    np.array_equal(x, p) for p in inits):
                continue
            inits.append(x)
    for x in inits:
        evaluate(x, batch_id=0)
    if cfg.init_count >= 2:
        history.batch_diversity[0] = batch_diversity(np.stack(inits))

    model = basis = None
    batch_id = 0
    while len(history.records) < cfg.budget:
        batch_id += 1
        b = min(cfg.batch_size, cfg.budget - len(history.records))
        if model is None or (batch_id - 1) % cfg.refit_period == 0:
            model, basis = _fit_model(points, outputs, parity_basis,
                                      parity_rows, cfg)
        round_ss = select_ss.spawn(1)[0]
        sample_seeds = [np.random.default_rng(child).integers(
            0, 2 ** 63, size=(MAX_RESAMPLES + 1, 2))
            for child in round_ss.spawn(b)]
        if cfg.threads > 1 and b > 1:
            with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
                proposals = list(pool.map(
                    lambda s: _propose(model, basis, cfg, s[0][0], s[0][1]),
                    sample_seeds))
        else:
            proposals = [_propose(model, basis, cfg, s[0][0], s[0][1])
                         for s in sample_seeds]
        chosen = []
        round_taken = set(taken)
        dedupe_rng = np.random.default_rng(round_ss)
        for k in range(b):
            candidate, theta = proposals[k]
            x = _dedupe(candidate, theta, model, basis, cfg, round_taken,
                        sample_seeds[k], dedupe_rng)
            round_taken.add(_point_key(x))
            chosen.append(x)
        for x in chosen:
            evaluate(x, batch_id=batch_id)
        if b >= 2:
            history.batch_diversity[batch_id] = batch_diversity(np.stack(chosen))

    history.meta["budget"] = cfg.budget
    history.meta["batches"] = batch_id
    return history


def run_batch_bo(cfg):
    """Batch-parallel variant; requires batch_size >= 2."""
    if cfg.batch_size < 2:
        raise ConfigurationError("run_batch_bo requires batch_size >= 2")
    return run_bo(cfg)
