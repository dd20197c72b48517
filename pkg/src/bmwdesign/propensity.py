"""Logistic-regression propensity model fitted by IRLS.

The objective is the ridge-penalized Bernoulli log-likelihood

    l(b0, b) = sum_n [tau_n * eta_n - log(1 + exp(eta_n))] - (lam / 2) * |b|^2,
    eta_n = b0 + b . x_n,

with the intercept left unpenalized. Scores are ``exp(eta) / (1 + exp(eta))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from bmwdesign.errors import NumericFailure

RIDGE_CAP = 1.0


@dataclass(frozen=True)
class FitConfig:
    ridge: float = 1e-6
    max_iter: int = 100
    tol: float = 1e-8
    clamp: float = 1e-12

    def __post_init__(self):
        if not self.ridge > 0:
            raise ValueError("ridge must be > 0")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if not 0 < self.clamp < 0.5:
            raise ValueError("clamp must lie in (0, 0.5)")


@dataclass(frozen=True)
class PropensityFit:
    intercept: float
    coefficients: np.ndarray
    scores: np.ndarray
    converged: bool
    iterations: int
    final_gradient_norm: float
    ridge_lambda: float

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([[self.intercept], self.coefficients])

    def to_dict(self) -> dict:
        return {
            "intercept": self.intercept,
            "coefficients": [float(c) for c in self.coefficients],
            "converged": self.converged,
            "iterations": self.iterations,
            "final_gradient_norm": self.final_gradient_norm,
            "ridge_lambda": self.ridge_lambda,
        }


def _design(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return np.hstack([np.ones((x.shape[0], 1)), x])


def _expit(eta):
    # numerically stable logistic
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def penalized_loglik(theta, x, labels, ridge: float) -> float:
    """Penalized log-likelihood at ``theta = (b0, b1, ..., bi)``."""
    xd = _design(x)
    theta = np.asarray(theta, dtype=float)
    eta = xd @ theta
    y = np.asarray(labels, dtype=float)
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)) - 0.5 * ridge * theta[1:] @ theta[1:])


def penalized_gradient(theta, x, labels, ridge: float) -> np.ndarray:
    """Analytic gradient of :func:`penalized_loglik`."""
    xd = _design(x)
    theta = np.asarray(theta, dtype=float)
    p = _expit(xd @ theta)
    g = xd.T @ (np.asarray(labels, dtype=float) - p)
    g[1:] -= ridge * theta[1:]
    return g


def predict_scores(fit: PropensityFit, scaled_features, clamp: float = 1e-12) -> np.ndarray:
    """Logistic of ``b0 + b . x`` per row, clamped into ``[clamp, 1 - clamp]``."""
    x = np.asarray(scaled_features, dtype=float)
    if x.ndim == 1:
        x = x[:, None] if fit.coefficients.size == 1 else x[None, :]
    if x.shape[1] != fit.coefficients.size:
        raise ValueError(
            f"feature matrix has {x.shape[1]} columns, fit has {fit.coefficients.size} coefficients"
        )
    eta = fit.intercept + x @ fit.coefficients
    return np.clip(_expit(eta), clamp, 1.0 - clamp)


def fit_logistic(scaled_features, labels, config: FitConfig | None = None) -> PropensityFit:
    """Maximize the penalized log-likelihood by Newton/IRLS with step halving.

    Non-convergence within ``config.max_iter`` is returned as
    ``converged=False`` rather than raised. A singular weighted system bumps
    the ridge by x10 up to ``RIDGE_CAP`` before giving up with
    :class:`NumericFailure`.
    """
    config = config or FitConfig()
    xd = _design(scaled_features)
    y = np.asarray(getattr(labels, "labels", labels), dtype=float)
    if y.shape[0] != xd.shape[0]:
        raise ValueError("labels and feature rows differ in length")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")

    k = xd.shape[1]
    ridge = config.ridge
    penalty = np.full(k, ridge)
    penalty[0] = 0.0
    theta = np.zeros(k)
    damp = 0.0

    def objective(t):
        eta = xd @ t
        return float(np.sum(y * eta - np.logaddexp(0.0, eta)) - 0.5 * ridge * t[1:] @ t[1:])

    eta = xd @ theta
    p = _expit(eta)
    f = objective(theta)
    converged = False
    iterations = 0
    gnorm = np.inf
    for iterations in range(1, config.max_iter + 1):
        g = xd.T @ (y - p) - penalty * theta
        gnorm = float(np.linalg.norm(g))
        if gnorm <= config.tol:
            converged = True
            iterations -= 1
            break
        w = p * (1.0 - p)
        while True:
            h = (xd.T * w) @ xd + np.diag(penalty)
            # damping of the unpenalized intercept direction, only after a failure
            h[0, 0] += damp
            try:
                step = np.linalg.solve(h, g)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                break
            if ridge * 10 > RIDGE_CAP:
                raise NumericFailure("singular weighted system in logistic fit")
            ridge *= 10
            damp = ridge
            penalty[1:] = ridge
            f = objective(theta)
            g = xd.T @ (y - p) - penalty * theta
        t = 1.0
        while True:
            cand = theta + t * step
            fc = objective(cand)
            if fc >= f - 1e-12 * abs(f) or t < 1e-10:
                break
            t *= 0.5
        theta = cand
        f = fc
        p = _expit(xd @ theta)
    else:
        g = xd.T @ (y - p) - penalty * theta
        gnorm = float(np.linalg.norm(g))
        converged = gnorm <= config.tol

    scores = np.clip(p, config.clamp, 1.0 - config.clamp)
    return PropensityFit(
        intercept=float(theta[0]),
        coefficients=theta[1:].copy(),
        scores=scores,
        converged=converged,
        iterations=iterations,
        final_gradient_norm=gnorm,
        ridge_lambda=ridge,
    )
