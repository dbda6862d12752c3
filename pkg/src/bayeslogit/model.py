"""Logistic likelihood with independent Gaussian priors.

All densities are log-scale and unnormalized where the normalizer is
intractable; every evaluation is finite for finite inputs (the log-sigmoid
is computed through ``logaddexp``, never through a bare ``exp``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Independent Normal(mean_j, variance_j) prior per coefficient."""

    prior_mean: np.ndarray
    prior_variance: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.prior_mean, dtype=float)
        var = np.asarray(self.prior_variance, dtype=float)
        object.__setattr__(self, "prior_mean", mean)
        object.__setattr__(self, "prior_variance", var)
        if mean.ndim != 1 or mean.shape != var.shape:
            raise ValueError("prior mean and variance must be 1-D with equal length")
        if np.any(var <= 0):
            raise ValueError("prior variances must be positive")

    @classmethod
    def default(cls, dim: int, mean: float = 0.0, variance: float = 1000.0) -> "ModelSpec":
        """Weakly informative prior: Normal(0, 1000) on every coefficient."""
        return cls(np.full(dim, float(mean)), np.full(dim, float(variance)))

    @property
    def dim(self) -> int:
        return self.prior_mean.shape[0]


def sigmoid(z):
    """Standard logistic function, overflow-safe for |z| up to 700 and beyond.

    Scalar in, scalar out; array in, array out.
    """
    z = np.asarray(z, dtype=float)
    m = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + m), m / (1.0 + m))
    return float(out) if out.ndim == 0 else out


def log_sigmoid(z):
    """log(sigmoid(z)) without intermediate overflow or log(0)."""
    return -np.logaddexp(0.0, -np.asarray(z, dtype=float))


def _check_theta(theta: np.ndarray, dim: int, what: str) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.shape[0] != dim:
        raise ValueError(f"theta has length {theta.shape}, {what} expects {dim}")
    return theta


def log_likelihood(theta: np.ndarray, ds: Dataset) -> float:
    """Bernoulli log-likelihood sum_i [y_i log p_i + (1-y_i) log(1-p_i)].

    Uses y*z - logaddexp(0, z), so the result is finite for any finite theta.
    """
    theta = _check_theta(theta, ds.dim, "the design matrix")
    z = ds.X @ theta
    return float(np.sum(ds.y * z - np.logaddexp(0.0, z)))


def log_prior(theta: np.ndarray, spec: ModelSpec) -> float:
    """Sum of Normal log-densities, normalization constants included."""
    theta = _check_theta(theta, spec.dim, "the prior")
    v = spec.prior_variance
    resid = theta - spec.prior_mean
    return float(-0.5 * np.sum(np.log(2.0 * np.pi * v) + resid * resid / v))


def log_posterior(theta: np.ndarray, ds: Dataset, spec: ModelSpec) -> float:
    """Unnormalized log-posterior: log-likelihood plus log-prior."""
    return log_likelihood(theta, ds) + log_prior(theta, spec)


def grad_log_posterior(theta: np.ndarray, ds: Dataset, spec: ModelSpec) -> np.ndarray:
    """Exact gradient: X^T (y - sigmoid(X theta)) - (theta - mean) / variance."""
    theta = _check_theta(theta, ds.dim, "the design matrix")
    if spec.dim != ds.dim:
        raise ValueError("prior dimension does not match design matrix")
    z = ds.X @ theta
    return ds.X.T @ (ds.y - sigmoid(z)) - (theta - spec.prior_mean) / spec.prior_variance


def make_target(ds: Dataset, spec: ModelSpec):
    """Fused (log-posterior, gradient) callable for the sampler.

    Shares the X @ theta product between the density and its gradient; agrees
    with log_posterior / grad_log_posterior exactly.
    """
    if spec.dim != ds.dim:
        raise ValueError("prior dimension does not match design matrix")
    X, y = ds.X, ds.y
    mean, var = spec.prior_mean, spec.prior_variance
    log_norm = -0.5 * float(np.sum(np.log(2.0 * np.pi * var)))

    def target(theta: np.ndarray) -> tuple[float, np.ndarray]:
        z = X @ theta
        resid = theta - mean
        logp = (
            float(np.sum(y * z - np.logaddexp(0.0, z)))
            - 0.5 * float(np.sum(resid * resid / var))
            + log_norm
        )
        grad = X.T @ (y - sigmoid(z)) - resid / var
        return logp, grad

    return target
