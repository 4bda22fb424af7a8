"""Bayesian linear surrogate over hypercube diffusion features.

The weight-space posterior is Gaussian with mean (F'F + s2*U^-1)^-1 F'y and
covariance (F'F + s2*U^-1)^-1 * s2, where U is a diagonal prior scale matrix
(identity by default, or a strong-hierarchy sparsity structure).  Evidence
maximization over a (beta, noise) grid replaces any sampling-based
hyperparameter treatment; all solves go through jittered Cholesky
factorizations in the D-dimensional weight space.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .errors import ConfigurationError, DimensionMismatchError, SingularModelError
from .features import parity_signs

JITTER_ESCALATIONS = 6


@dataclass
class TrainingSet:
    """Evaluated points with their features under one active basis."""

    points: np.ndarray
    outputs: np.ndarray
    basis: object
    parity: np.ndarray = field(repr=False)
    features: np.ndarray = field(repr=False)

    @property
    def size(self):
        return self.outputs.shape[0]


def make_training_set(points, outputs, basis):
    pts = np.atleast_2d(np.asarray(points, dtype=np.int8))
    y = np.asarray(outputs, dtype=np.float64)
    if pts.shape[0] != y.shape[0]:
        raise DimensionMismatchError(
            f"{pts.shape[0]} points but {y.shape[0]} outputs")
    if pts.shape[0] < 1:
        raise ConfigurationError("training set must contain at least one row")
    if not np.all(np.isfinite(y)):
        raise ConfigurationError("outputs must be finite")
    parity = parity_signs(pts, basis)
    return TrainingSet(points=pts, outputs=y, basis=basis, parity=parity,
                       features=parity * basis.weights)


@dataclass
class PosteriorModel:
    """Gaussian posterior over feature weights, immutable after fitting."""

    mean: np.ndarray
    covariance_factor: np.ndarray  # lower triangular L with L L' = Sigma
    noise_variance: float
    prior_scales: np.ndarray | None
    basis: object

    @property
    def dim(self):
        return self.mean.shape[0]

    def covariance(self):
        return self.covariance_factor @ self.covariance_factor.T


@dataclass
class HyperConfig:
    """Evidence-grid search space for (beta, noise variance)."""

    beta_grid: np.ndarray = field(
        default_factory=lambda: np.geomspace(0.01, 2.0, 10))
    noise_grid: np.ndarray = field(
        default_factory=lambda: np.geomspace(1e-4, 1.0, 6))
    jitter: float = 1e-10

    def __post_init__(self):
        self.beta_grid = np.sort(np.asarray(self.beta_grid, dtype=np.float64))
        self.noise_grid = np.sort(np.asarray(self.noise_grid, dtype=np.float64))
        if self.beta_grid.size == 0 or self.noise_grid.size == 0:
            raise ConfigurationError("hyperparameter grids must be non-empty")
        if self.jitter <= 0:
            raise ConfigurationError("jitter must be positive")


def _chol_with_jitter(mat, base_jitter):
    """Cholesky with a x10 jitter ladder; raises SingularModelError at the top."""
    try:
        return np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        pass
    eye = np.eye(mat.shape[0])
    for k in range(JITTER_ESCALATIONS + 1):
        try:
            return np.linalg.cholesky(mat + base_jitter * 10.0 ** k * eye)
        except np.linalg.LinAlgError:
            continue
    raise SingularModelError(
        f"factorization failed after jitter up to {base_jitter * 10.0 ** JITTER_ESCALATIONS:g}")


def _check_prior_scales(prior_scales, dim):
    if prior_scales is None:
        return None
    scales = np.asarray(prior_scales, dtype=np.float64)
    if scales.shape != (dim,):
        raise DimensionMismatchError(
            f"prior scales have length {scales.shape}, expected {dim}")
    if np.any(scales <= 0.0) or not np.all(np.isfinite(scales)):
        raise ConfigurationError("prior scales must be positive and finite")
    return scales


def fit_posterior(train, noise_variance, prior_scales=None):
    """Posterior mean and covariance of the weight vector.

    With F the feature matrix, y the outputs and U = diag(prior_scales):
    mean = (F'F + s2*U^-1)^-1 F'y, covariance = (F'F + s2*U^-1)^-1 * s2.
    """
    if noise_variance <= 0:
        raise ConfigurationError(
            f"noise variance must be positive, got {noise_variance}")
    phi = train.features
    if not np.all(np.isfinite(phi)):
        raise ConfigurationError("features must be finite")
    d = phi.shape[1]
    scales = _check_prior_scales(prior_scales, d)
    gram = phi.T @ phi
    precision = gram + noise_variance * (
        np.eye(d) if scales is None else np.diag(1.0 / scales))
    base_jitter = 1e-10 * np.trace(gram) / d if np.trace(gram) > 0 else 1e-10
    chol = _chol_with_jitter(precision, base_jitter)
    mean = cho_solve((chol, True), phi.T @ train.outputs)
    cov = noise_variance * cho_solve((chol, True), np.eye(d))
    cov = 0.5 * (cov + cov.T)
    cov_factor = _chol_with_jitter(cov, 1e-10 * np.trace(cov) / d)
    return PosteriorModel(mean=mean, covariance_factor=cov_factor,
                          noise_variance=float(noise_variance),
                          prior_scales=scales, basis=train.basis)


def sample_theta(model, rng_seed):
    """One posterior draw: mean + L z with z standard normal, seeded."""
    z = np.random.default_rng(rng_seed).standard_normal(model.dim)
    return model.mean + model.covariance_factor @ z


def predict(model, phi_x):
    """Predictive mean and variance (including the noise floor) at phi(x)."""
    phi_x = np.asarray(phi_x, dtype=np.float64)
    if phi_x.shape != (model.dim,):
        raise DimensionMismatchError(
            f"feature vector has shape {phi_x.shape}, expected ({model.dim},)")
    mean = float(model.mean @ phi_x)
    half = model.covariance_factor.T @ phi_x
    return mean, float(half @ half + model.noise_variance)


def log_evidence(train, beta, noise_variance, prior_scales=None):
    """Log marginal likelihood of the outputs with features rebuilt at beta.

    -0.5 * [ y'(s2 I + F U F')^-1 y + logdet(s2 I + F U F') + N log 2pi ].
    """
    if noise_variance <= 0:
        raise ConfigurationError(
            f"noise variance must be positive, got {noise_variance}")
    phi = train.parity * np.exp(-float(beta) * train.basis.orders)
    scales = _check_prior_scales(prior_scales, phi.shape[1])
    y = train.outputs
    n = y.shape[0]
    scaled = phi if scales is None else phi * scales
    cov = noise_variance * np.eye(n) + scaled @ phi.T
    chol = _chol_with_jitter(cov, 1e-10 * np.trace(cov) / n)
    alpha = solve_triangular(chol, y, lower=True)
    logdet = 2.0 * np.sum(np.log(np.diag(chol)))
    return float(-0.5 * (alpha @ alpha + logdet + n * math.log(2.0 * math.pi)))


def fit_hyperparameters(train, cfg):
    """Grid-argmax of the evidence; ties prefer smaller beta, then noise.

    Returns (beta, noise_variance).  Raises if every grid point fails to
    factorize.
    """
    best = None
    best_ev = -np.inf
    failures = 0
    for beta in cfg.beta_grid:
        phi = train.parity * np.exp(-float(beta) * train.basis.orders)
        gram = phi @ phi.T
        n = train.size
        eye = np.eye(n)
        for noise in cfg.noise_grid:
            cov = noise * eye + gram
            try:
                chol = _chol_with_jitter(cov, cfg.jitter * np.trace(cov) / n)
            except SingularModelError:
                failures += 1
                continue
            alpha = solve_triangular(chol, train.outputs, lower=True)
            ev = -0.5 * (alpha @ alpha + 2.0 * np.sum(np.log(np.diag(chol)))
                         + n * math.log(2.0 * math.pi))
            if ev > best_ev:
                best_ev = ev
                best = (float(beta), float(noise))
    if best is None:
        raise SingularModelError(
            f"all {failures} hyperparameter grid points failed to factorize")
    return best


def hierarchical_prior_scales(basis, scales):
    """Strong-hierarchy prior scales: order-1 entries s_i, order-2 s_i*s_j.

    ``scales`` is a scalar shared across dimensions or one positive value per
    dimension; the constant feature keeps scale 1.
    """
    s = np.asarray(scales, dtype=np.float64)
    if s.ndim == 0:
        s = np.full(basis.n, float(s))
    if s.shape != (basis.n,):
        raise DimensionMismatchError(
            f"need {basis.n} per-dimension scales, got {s.shape}")
    if np.any(s <= 0.0):
        raise ConfigurationError("prior scales must be positive")
    return np.exp(basis.mask.astype(np.float64) @ np.log(s))


def fit_shared_prior_scale(train, beta, noise_variance, grid=None):
    """Evidence-grid fit of the single shared strong-hierarchy scale."""
    if grid is None:
        grid = np.geomspace(0.1, 10.0, 7)
    best_s = None
    best_ev = -np.inf
    for s in np.sort(np.asarray(grid, dtype=np.float64)):
        scales = hierarchical_prior_scales(train.basis, s)
        ev = log_evidence(train, beta, noise_variance, prior_scales=scales)
        if ev > best_ev:
            best_ev = ev
            best_s = float(s)
    return best_s
