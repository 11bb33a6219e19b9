"""Weighted and generalized least squares with residual-scale conventions.

The coefficient standard errors returned by the fit functions are "unscaled":
square roots of the diagonal of the unit-variance coefficient covariance
(X'WX)^-1 (or (X'Omega^-1 X)^-1 for the generalized fit). Inference-time
scaling is applied by :func:`scaled_se` according to the chosen
:class:`WeightScheme`:

* fixed-effect: the residual standard error is forced to 1, so the unscaled
  standard error is used as-is;
* multiplicative random-effects: the unscaled standard error is multiplied by
  max(sigma_hat, 1) — inflated under overdispersion, never deflated below the
  fixed-effect value.

Point estimates never depend on the scheme.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.linalg import solve_triangular

__all__ = [
    "RankError",
    "FactorizationError",
    "WeightScheme",
    "RegressionSpec",
    "RegressionFit",
    "fit_wls",
    "fit_gls",
    "scaled_se",
    "weighted_mean",
    "weighted_var",
    "weighted_cov",
]

# Singular values below RANK_TOL * largest are treated as zero.
RANK_TOL = 1e-10


class RankError(ValueError):
    """Design matrix is rank deficient (collinear or zero columns)."""


class FactorizationError(ValueError):
    """Covariance matrix factorization failed (not positive definite)."""


class WeightScheme(Enum):
    FIXED_EFFECT = "fixed"
    MULTIPLICATIVE_RANDOM_EFFECT = "random"


@dataclass(frozen=True)
class RegressionSpec:
    """Weights and intercept choice for a weighted least-squares fit.

    Weights carry the semantic se(beta_Yj)^-2 and must be positive and finite.
    """

    include_intercept: bool
    weights: np.ndarray

    def __post_init__(self) -> None:
        weights = np.asarray(self.weights, dtype=float)
        if weights.ndim != 1:
            raise ValueError("weights must be a vector")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ValueError("weights must be positive and finite")
        weights.setflags(write=False)
        object.__setattr__(self, "weights", weights)


@dataclass(frozen=True)
class RegressionFit:
    """Result of a (generalized) weighted least-squares fit.

    coefficients: length p, intercept first when present.
    unscaled_se: sqrt of the diagonal of the unit-variance covariance.
    residual_scale: sigma_hat = sqrt(weighted RSS / df_residual); 0 with the
        exact_fit flag set when df_residual = 0 or the fit is exact.
    fitted / residuals are on the original (unweighted) response scale.
    """

    coefficients: np.ndarray
    unscaled_se: np.ndarray
    residual_scale: float
    df_residual: int
    fitted: np.ndarray
    residuals: np.ndarray
    exact_fit: bool


def _as_design(design: np.ndarray) -> np.ndarray:
    design = np.asarray(design, dtype=float)
    if design.ndim == 1:
        design = design[:, None]
    if design.ndim != 2:
        raise ValueError("design must be a J x p matrix")
    return design


def _qr_solve(xw: np.ndarray, yw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Solve min ||yw - xw b|| via QR with rank detection.

    Returns (coefficients, unscaled_se). The orthogonal decomposition is used
    instead of explicit normal-equation inversion for rank detection and
    conditioning on near-collinear designs.
    """
    q, r = np.linalg.qr(xw)
    singular_values = np.linalg.svd(r, compute_uv=False)
    largest = singular_values[0] if singular_values.size else 0.0
    if largest == 0.0 or singular_values[-1] < RANK_TOL * largest:
        raise RankError("design matrix is rank deficient")
    beta = solve_triangular(r, q.T @ yw, lower=False)
    # (X'WX)^-1 = R^-1 R^-T, so its diagonal is the row sums of squares of R^-1.
    r_inv = solve_triangular(r, np.eye(r.shape[0]), lower=False)
    unscaled_se = np.sqrt(np.sum(r_inv ** 2, axis=1))
    return beta, unscaled_se


def _finish(x: np.ndarray, y: np.ndarray, beta: np.ndarray,
            unscaled_se: np.ndarray, weighted_rss: float,
            weighted_tss: float) -> RegressionFit:
    j, p = x.shape
    fitted = x @ beta
    residuals = y - fitted
    df = j - p
    # Residual sums at rounding level relative to the response are an exact
    # fit; without the relative cutoff an exactly-linear response would get
    # sigma ~ 1e-16 instead of 0 and never set the flag.
    exact_tol = (100.0 * np.finfo(float).eps) ** 2 * weighted_tss
    if df > 0 and weighted_rss > exact_tol:
        sigma = float(np.sqrt(weighted_rss / df))
    else:
        sigma = 0.0
    return RegressionFit(
        coefficients=beta,
        unscaled_se=unscaled_se,
        residual_scale=sigma,
        df_residual=df,
        fitted=fitted,
        residuals=residuals,
        exact_fit=(df == 0 or sigma == 0.0),
    )


def fit_wls(design: np.ndarray, response: np.ndarray,
            spec: RegressionSpec) -> RegressionFit:
    """Weighted least squares: minimize sum_j w_j (y_j - x_j' b)^2."""
    x = _as_design(design)
    y = np.asarray(response, dtype=float)
    if spec.include_intercept:
        x = np.column_stack([np.ones(x.shape[0]), x])
    j, p = x.shape
    if y.shape != (j,):
        raise ValueError("response length does not match design")
    if spec.weights.shape != (j,):
        raise ValueError("weights length does not match design")
    if j < p:
        raise ValueError(f"J={j} observations < {p} parameters")
    sqrt_w = np.sqrt(spec.weights)
    beta, unscaled_se = _qr_solve(x * sqrt_w[:, None], y * sqrt_w)
    residuals = y - x @ beta
    weighted_rss = float(np.sum(spec.weights * residuals ** 2))
    weighted_tss = float(np.sum(spec.weights * y ** 2))
    return _finish(x, y, beta, unscaled_se, weighted_rss, weighted_tss)


def fit_gls(design: np.ndarray, response: np.ndarray,
            omega: np.ndarray) -> RegressionFit:
    """Generalized least squares with full error covariance Omega.

    Coefficients equal (X' Omega^-1 X)^-1 X' Omega^-1 y, computed by
    Cholesky-transforming to an ordinary fit; unscaled_se[i] is the square
    root of ((X' Omega^-1 X)^-1)_ii. The caller supplies any intercept column
    explicitly.
    """
    x = _as_design(design)
    y = np.asarray(response, dtype=float)
    j, p = x.shape
    if y.shape != (j,):
        raise ValueError("response length does not match design")
    omega = np.asarray(omega, dtype=float)
    if omega.shape != (j, j):
        raise ValueError("omega must be J x J")
    if j < p:
        raise ValueError(f"J={j} observations < {p} parameters")
    try:
        cho = np.linalg.cholesky(omega)
    except np.linalg.LinAlgError:
        raise FactorizationError(
            "omega is not positive definite (factorization failed)") from None
    xt = solve_triangular(cho, x, lower=True)
    yt = solve_triangular(cho, y, lower=True)
    beta, unscaled_se = _qr_solve(xt, yt)
    # sigma_hat is defined on the decorrelated scale, where the model has
    # unit error variance.
    weighted_rss = float(np.sum((yt - xt @ beta) ** 2))
    weighted_tss = float(np.sum(yt ** 2))
    return _finish(x, y, beta, unscaled_se, weighted_rss, weighted_tss)


def scaled_se(fit: RegressionFit, scheme: WeightScheme) -> np.ndarray:
    """Inference-time coefficient standard errors under the given scheme."""
    if scheme is WeightScheme.FIXED_EFFECT:
        return fit.unscaled_se.copy()
    # residual_scale is already 0 when df_residual = 0, so max() keeps the
    # exact-fit case finite instead of dividing by a zero residual scale.
    return fit.unscaled_se * max(fit.residual_scale, 1.0)


def _check_moment_args(values: np.ndarray, weights: np.ndarray) -> None:
    if values.shape != weights.shape or values.ndim != 1:
        raise ValueError("values and weights must be vectors of equal length")
    if np.any(weights <= 0) or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be positive and finite")


def weighted_mean(values: np.ndarray, weights: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    _check_moment_args(values, weights)
    return float(np.sum(values * weights) / np.sum(weights))


def weighted_var(values: np.ndarray, weights: np.ndarray) -> float:
    """Weighted central second moment, normalized by the total weight."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    _check_moment_args(values, weights)
    centered = values - np.sum(values * weights) / np.sum(weights)
    return float(np.sum(weights * centered ** 2) / np.sum(weights))


def weighted_cov(a: np.ndarray, b: np.ndarray, weights: np.ndarray) -> float:
    """Weighted central cross moment, normalized by the total weight."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    weights = np.asarray(weights, dtype=float)
    _check_moment_args(a, weights)
    _check_moment_args(b, weights)
    total = np.sum(weights)
    a_centered = a - np.sum(a * weights) / total
    b_centered = b - np.sum(b * weights) / total
    return float(np.sum(weights * a_centered * b_centered) / total)
