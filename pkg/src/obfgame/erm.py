"""Noisy empirical-risk-minimization laboratory.

Trains a regularized logistic classifier on synthetically generated,
doubly-perturbed data and measures the excess expected loss against a
clean-data reference, to validate that the excess scales linearly in the
injected variance aggregate with a 1/N slope.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateRegressionError
from .model import NoiseProfile

__all__ = [
    "Dataset",
    "GeneratorSpec",
    "PerturbationSpec",
    "ErmConfig",
    "Classifier",
    "FitResult",
    "ExcessRisk",
    "ScalingLevel",
    "ScalingReport",
    "generate_synthetic",
    "perturb_dataset",
    "erm_fit",
    "reference_classifier",
    "excess_risk",
    "variance_aggregate",
    "levels_from_aggregates",
    "scaling_experiment",
]


@dataclass
class Dataset:
    """Labeled feature vectors: features (n, d), labels in {-1, +1}."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if self.features.ndim != 2:
            raise ValueError("features must be a 2-D array")
        if self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels must be 1-D with one entry per row")
        if not np.all(np.isin(self.labels, (-1.0, 1.0))):
            raise ValueError("labels must take values in {-1, +1}")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class GeneratorSpec:
    """Gaussian class-conditional generator: features N(y * mu, I) with
    mu = (separation, 0, ..., 0)."""

    d: int
    separation: float

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if self.separation < 0:
            raise ValueError("separation must be non-negative")


@dataclass
class PerturbationSpec:
    """Per-user noise stds plus the learner's shared std."""

    sigma_L: float
    sigma_S_per_user: np.ndarray
    rng_seed: int

    def __post_init__(self):
        self.sigma_S_per_user = np.asarray(self.sigma_S_per_user, dtype=float)
        if self.sigma_L < 0 or np.any(self.sigma_S_per_user < 0):
            raise ValueError("noise stds must be non-negative")


@dataclass(frozen=True)
class ErmConfig:
    rho: float
    loss: str = "logistic"
    max_iters: int = 2000
    grad_tolerance: float = 1e-8

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.loss != "logistic":
            raise ValueError(f"unsupported loss {self.loss!r}")
        if not self.grad_tolerance > 0:
            raise ValueError("grad_tolerance must be positive")


@dataclass
class Classifier:
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")


@dataclass
class FitResult:
    classifier: Classifier
    converged: bool
    iterations: int
    grad_norm: float
    objectives: list[float] = field(default_factory=list)


@dataclass(frozen=True)
class ExcessRisk:
    estimate: float
    std_error: float
    n_eval: int


@dataclass(frozen=True)
class ScalingLevel:
    index: int
    profile: NoiseProfile
    v: float
    mean_excess_risk: float
    std_error: float
    replications: int


@dataclass(frozen=True)
class ScalingReport:
    levels: tuple[ScalingLevel, ...]
    slope: float
    intercept: float
    r_squared: float
    rank_correlation: float
    n_records: int


def _task_seed(base: int, *index: int) -> int:
    """Stable per-task seed from the base seed and a task index."""
    return int(np.random.SeedSequence((base, *index)).generate_state(1)[0])


def generate_synthetic(n: int, d: int, separation: float,
                       rng_seed: int) -> Dataset:
    """Draw n labeled points: labels uniform on {-1, +1}, features Gaussian
    with mean y * (separation, 0, ..., 0) and identity covariance."""
    if n < 2:
        raise ValueError("n must be >= 2")
    spec = GeneratorSpec(d, separation)
    rng = np.random.default_rng(rng_seed)
    labels = rng.choice((-1.0, 1.0), size=n)
    features = rng.standard_normal((n, d))
    features[:, 0] += labels * spec.separation
    return Dataset(features, labels)


def perturb_dataset(data: Dataset, spec: PerturbationSpec) -> Dataset:
    """Add per-coordinate Gaussian noise: each row i gets user noise with std
    sigma_S_per_user[i], then every row gets learner noise with std sigma_L.
    Labels are unchanged."""
    if spec.sigma_S_per_user.shape != (data.n,):
        raise ValueError("sigma_S_per_user must have one entry per record")
    rng = np.random.default_rng(spec.rng_seed)
    user_noise = rng.standard_normal(data.features.shape)
    learner_noise = rng.standard_normal(data.features.shape)
    features = (data.features
                + user_noise * spec.sigma_S_per_user[:, None]
                + learner_noise * spec.sigma_L)
    return Dataset(features, data.labels.copy())


def _objective(w: np.ndarray, X: np.ndarray, y: np.ndarray, rho: float) -> float:
    margins = y * (X @ w)
    return 0.5 * rho * float(w @ w) + float(np.mean(np.logaddexp(0.0, -margins)))


def _gradient(w: np.ndarray, X: np.ndarray, y: np.ndarray, rho: float) -> np.ndarray:
    margins = y * (X @ w)
    # sigmoid(-m) computed stably
    s = np.exp(-np.logaddexp(0.0, margins))
    return rho * w - (X * (y * s)[:, None]).mean(axis=0)


def erm_fit(data: Dataset, config: ErmConfig) -> FitResult:
    """Minimize rho/2 ||f||^2 + mean logistic loss by gradient descent with
    Armijo backtracking.  The objective is strictly convex, so the minimizer
    is unique; iteration stops at grad_tolerance or max_iters (the latter
    sets converged=False)."""
    X, y = data.features, data.labels
    w = np.zeros(data.d)
    fval = _objective(w, X, y, config.rho)
    objectives = [fval]
    step = 1.0
    grad_norm = math.inf
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iters + 1):
        grad = _gradient(w, X, y, config.rho)
        grad_norm = float(np.sqrt(grad @ grad))
        if grad_norm <= config.grad_tolerance:
            converged = True
            iterations -= 1
            break
        step = min(step * 2.0, 1e8)
        while True:
            candidate = w - step * grad
            cand_val = _objective(candidate, X, y, config.rho)
            if cand_val <= fval - 0.5 * step * grad_norm**2 or step < 1e-18:
                break
            step *= 0.5
        w, fval = candidate, cand_val
        objectives.append(fval)
    else:
        grad = _gradient(w, X, y, config.rho)
        grad_norm = float(np.sqrt(grad @ grad))
        converged = grad_norm <= config.grad_tolerance
    return FitResult(Classifier(w), converged, iterations, grad_norm, objectives)


def reference_classifier(gen: GeneratorSpec, config: ErmConfig,
                         n_ref: int = 100_000, rng_seed: int = 0) -> Classifier:
    """Approximate the population-optimal classifier by fitting one large
    clean sample from the generator."""
    data = generate_synthetic(n_ref, gen.d, gen.separation, rng_seed)
    return erm_fit(data, config).classifier


def excess_risk(f_d: Classifier, f_star: Classifier, config: ErmConfig,
                gen: GeneratorSpec, n_eval: int, rng_seed: int) -> ExcessRisk:
    """Paired Monte-Carlo estimate of the clean expected regularized loss gap
    between f_d and f_star, with the paired-sample standard error."""
    if n_eval < 1000:
        raise ValueError("n_eval must be >= 1000")
    data = generate_synthetic(n_eval, gen.d, gen.separation, rng_seed)
    X, y = data.features, data.labels
    loss_d = np.logaddexp(0.0, -y * (X @ f_d.weights))
    loss_s = np.logaddexp(0.0, -y * (X @ f_star.weights))
    diffs = loss_d - loss_s
    reg_gap = 0.5 * config.rho * (float(f_d.weights @ f_d.weights)
                                  - float(f_star.weights @ f_star.weights))
    estimate = reg_gap + float(diffs.mean())
    std_error = float(diffs.std(ddof=1) / math.sqrt(n_eval))
    return ExcessRisk(estimate, std_error, n_eval)


def variance_aggregate(profile: NoiseProfile, n_records: int) -> float:
    """Weighted noise-variance sum v = sigma_L^2 + ((N-1)/N) sigma_bar^2
    + (1/N) sigma_S^2 that the excess risk is regressed against."""
    return (profile.sigma_L**2
            + ((n_records - 1) / n_records) * profile.sigma_bar_other**2
            + profile.sigma_S**2 / n_records)


def levels_from_aggregates(aggregates: Sequence[float],
                           n_records: int) -> tuple[NoiseProfile, ...]:
    """Noise profiles carrying each aggregate v entirely on the other-users
    coordinate: (0, sqrt(v N / (N-1)), 0)."""
    if n_records < 2:
        raise ValueError("n_records must be >= 2")
    scale = n_records / (n_records - 1)
    return tuple(NoiseProfile(0.0, math.sqrt(v * scale), 0.0)
                 for v in aggregates)


def _per_user_stds(profile: NoiseProfile, n_records: int,
                   carriers: int | None) -> np.ndarray:
    """Realize a profile as per-user stds: the tracked user (row 0) at
    sigma_S, the others' variance mass either spread evenly (carriers=None)
    or concentrated on the first ``carriers`` other rows.  Either layout
    leaves the mean of the others' variances, and hence the aggregate v,
    unchanged."""
    stds = np.zeros(n_records)
    stds[0] = profile.sigma_S
    if n_records == 1:
        return stds
    mass = (n_records - 1) * profile.sigma_bar_other**2
    if carriers is None:
        stds[1:] = profile.sigma_bar_other
    else:
        if not 1 <= carriers <= n_records - 1:
            raise ValueError("carriers must lie in [1, n_records - 1]")
        stds[1:carriers + 1] = math.sqrt(mass / carriers)
    return stds


def _rank(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    ranks[order] = np.arange(len(values), dtype=float)
    return ranks


def scaling_experiment(gen: GeneratorSpec, n_records: int, config: ErmConfig,
                       noise_levels: Sequence[NoiseProfile],
                       replications: int, rng_seed: int,
                       n_eval: int = 8000, n_ref: int = 100_000,
                       carriers: int | None = None) -> ScalingReport:
    """Measure mean excess risk per noise level and regress it on the
    variance aggregate v.

    Every (level, replication) task draws its own training data, noise, and
    evaluation sample from seeds derived independently of the other tasks.
    Reports the least-squares slope and intercept, the coefficient of
    determination, and the rank correlation between v and the level means.
    """
    if len(noise_levels) < 4:
        raise ValueError("at least 4 noise levels are required")
    if replications < 10:
        raise ValueError("replications must be >= 10")
    v_values = np.array([variance_aggregate(p, n_records) for p in noise_levels])
    if np.ptp(v_values) == 0.0:
        raise DegenerateRegressionError(
            "all noise levels share the same variance aggregate")

    f_star = reference_classifier(gen, config, n_ref, _task_seed(rng_seed, 0))
    levels = []
    for li, profile in enumerate(noise_levels):
        stds = _per_user_stds(profile, n_records, carriers)
        estimates = np.empty(replications)
        for rep in range(replications):
            data = generate_synthetic(n_records, gen.d, gen.separation,
                                      _task_seed(rng_seed, 1, li, rep))
            noisy = perturb_dataset(data, PerturbationSpec(
                profile.sigma_L, stds, _task_seed(rng_seed, 2, li, rep)))
            fit = erm_fit(noisy, config)
            estimates[rep] = excess_risk(
                fit.classifier, f_star, config, gen, n_eval,
                _task_seed(rng_seed, 3, li, rep)).estimate
        levels.append(ScalingLevel(
            index=li,
            profile=profile,
            v=float(v_values[li]),
            mean_excess_risk=float(estimates.mean()),
            std_error=float(estimates.std(ddof=1) / math.sqrt(replications)),
            replications=replications,
        ))

    means = np.array([lv.mean_excess_risk for lv in levels])
    design = np.vstack([v_values, np.ones_like(v_values)]).T
    (slope, intercept), *_ = np.linalg.lstsq(design, means, rcond=None)
    residuals = means - design @ (slope, intercept)
    total = float(np.sum((means - means.mean())**2))
    r_squared = 1.0 - float(np.sum(residuals**2)) / total if total > 0 else 0.0
    # ranks are distinct integers, so the Spearman formula is exact and a
    # perfectly co-monotone grid yields exactly +1
    diff = _rank(v_values) - _rank(means)
    n_lv = len(means)
    rank_correlation = 1.0 - 6.0 * float(diff @ diff) / (n_lv * (n_lv**2 - 1))
    return ScalingReport(tuple(levels), float(slope), float(intercept),
                         r_squared, rank_correlation, n_records)
