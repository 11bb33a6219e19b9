"""Summary-data Mendelian randomization estimators.

Four weighted-regression estimators over per-variant association estimates,
tagged UI/UE/MI/ME throughout:

* UI — univariable inverse-variance weighted (zero-intercept regression of
  outcome associations on risk-factor associations, weights se_Y^-2);
* UE — univariable MR-Egger (same regression with a free intercept, which
  estimates the average direct (pleiotropic) effect per allele);
* MI — multivariable IVW (zero-intercept regression on K association
  columns);
* ME — multivariable MR-Egger (K columns plus a free intercept).

Egger-type estimators require the dataset to be orientation-normalized with
respect to a reference risk factor (see :mod:`mrkit.orientation`): the
intercept is only identified once the per-variant sign convention is fixed.

Inference is t-based with the residual degrees of freedom of each regression:
J-1 (UI), J-2 (UE), J-K (MI), J-(K+1) (ME). Fixed-effect and multiplicative
random-effects standard errors are as in :func:`mrkit.regression.scaled_se`;
point estimates are identical under both schemes.

Correlated-variant versions solve the same regressions by generalized least
squares with error covariance Omega_st = se_Ys * se_Yt * rho_st.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .data import SummaryDataset
from .regression import (
    RegressionSpec,
    WeightScheme,
    fit_gls,
    fit_wls,
    scaled_se,
    weighted_cov,
    weighted_var,
)

__all__ = [
    "MethodTag",
    "CausalEstimate",
    "InterceptTest",
    "MRResult",
    "ivw_univariable",
    "egger_univariable",
    "ivw_multivariable",
    "egger_multivariable",
    "ivw_correlated",
    "egger_correlated",
    "inside_bias_oracle",
    "f_statistic",
]

DEFAULT_SCHEME = WeightScheme.MULTIPLICATIVE_RANDOM_EFFECT


@dataclass(frozen=True)
class MethodTag:
    """Which estimator produced a result: UI/UE/MI/ME x scheme x variant set."""

    estimator: str  # "UI" | "UE" | "MI" | "ME"
    scheme: WeightScheme
    variants: str  # "independent" | "correlated"

    def __str__(self) -> str:
        return f"{self.estimator}/{self.scheme.value}/{self.variants}"


@dataclass(frozen=True)
class CausalEstimate:
    """Causal effect of one risk factor: log odds ratio per SD, with t inference.

    ``df`` is the residual degrees of freedom of the underlying regression;
    when it is zero the point estimate and standard error are still reported
    but ``p_value``/``ci_low``/``ci_high`` are NaN.
    """

    risk_factor: str
    theta_hat: float
    se: float
    ci_low: float
    ci_high: float
    p_value: float
    df: int
    method: MethodTag


@dataclass(frozen=True)
class InterceptTest:
    """Egger intercept: average direct effect per allele, and its t test."""

    theta_0: float
    se: float
    p_value: float


@dataclass(frozen=True)
class MRResult:
    """One estimator's full output on one dataset."""

    estimates: tuple[CausalEstimate, ...]
    intercept: InterceptTest | None
    residual_scale: float
    orientation_reference: str | None = None
    experimental: bool = False

    def estimate_for(self, risk_factor: str) -> CausalEstimate:
        for estimate in self.estimates:
            if estimate.risk_factor == risk_factor:
                return estimate
        raise KeyError(risk_factor)


def _check_level(level: float) -> None:
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must be in (0, 1), got {level}")


def _inference(theta: float, se: float, df: int,
               level: float) -> tuple[float, float, float]:
    """Two-sided t p-value and CI; NaN when no residual df remain."""
    if df <= 0:
        return math.nan, math.nan, math.nan
    p_value = 2.0 * float(stats.t.sf(abs(theta / se), df))
    half_width = float(stats.t.ppf(0.5 + level / 2.0, df)) * se
    return p_value, theta - half_width, theta + half_width


def _estimate(name: str, theta: float, se: float, df: int, method: MethodTag,
              level: float) -> CausalEstimate:
    p_value, ci_low, ci_high = _inference(theta, se, df, level)
    return CausalEstimate(
        risk_factor=name,
        theta_hat=float(theta),
        se=float(se),
        ci_low=ci_low,
        ci_high=ci_high,
        p_value=p_value,
        df=df,
        method=method,
    )


def _require_uncorrelated(dataset: SummaryDataset, op: str) -> None:
    if dataset.correlation is not None:
        raise ValueError(
            f"{op} assumes independent variants but a correlation matrix is "
            f"attached; use the correlated-variant estimator instead")


def _require_correlated(dataset: SummaryDataset, op: str) -> None:
    if dataset.correlation is None:
        raise ValueError(f"{op} requires an attached correlation matrix")


def _require_oriented(dataset: SummaryDataset, reference: str) -> None:
    if reference not in dataset.risk_factor_names:
        raise ValueError(
            f"unknown risk factor {reference!r}; "
            f"expected one of {', '.join(dataset.risk_factor_names)}")
    column = dataset.beta_x_matrix()[:, dataset.risk_factor_names.index(reference)]
    if np.any(column < 0):
        raise ValueError(
            f"dataset is not orientation-normalized: negative {reference} "
            f"associations present; run orient() first")


def _weight_spec(dataset: SummaryDataset, include_intercept: bool) -> RegressionSpec:
    return RegressionSpec(
        include_intercept=include_intercept,
        weights=dataset.se_y_vector() ** -2.0,
    )


def _error_covariance(dataset: SummaryDataset) -> np.ndarray:
    se_y = dataset.se_y_vector()
    return np.outer(se_y, se_y) * dataset.correlation.entries


def ivw_univariable(dataset: SummaryDataset,
                    scheme: WeightScheme = DEFAULT_SCHEME,
                    level: float = 0.95) -> MRResult:
    """Univariable inverse-variance weighted estimate (df = J - 1).

    Equivalent to the classical weighted mean of per-variant ratio estimates
    and computed as a zero-intercept weighted regression; the two forms agree
    by algebra. Sign-flip invariant, so no orientation is required.
    """
    _check_level(level)
    if dataset.k != 1:
        raise ValueError(f"univariable estimator requires K=1, got K={dataset.k}")
    _require_uncorrelated(dataset, "ivw_univariable")
    fit = fit_wls(dataset.beta_x_matrix(), dataset.beta_y_vector(),
                  _weight_spec(dataset, include_intercept=False))
    se = scaled_se(fit, scheme)
    tag = MethodTag("UI", scheme, "independent")
    estimate = _estimate(dataset.risk_factor_names[0], fit.coefficients[0],
                         se[0], fit.df_residual, tag, level)
    return MRResult(estimates=(estimate,), intercept=None,
                    residual_scale=fit.residual_scale)


def egger_univariable(dataset: SummaryDataset,
                      scheme: WeightScheme = DEFAULT_SCHEME,
                      level: float = 0.95) -> MRResult:
    """Univariable MR-Egger: free-intercept weighted regression (df = J - 2).

    The intercept estimates the average direct effect of a variant on the
    outcome; its t test (same df) is the usual test of directional
    pleiotropy. Requires an oriented dataset and J >= 3.
    """
    _check_level(level)
    if dataset.k != 1:
        raise ValueError(f"univariable estimator requires K=1, got K={dataset.k}")
    _require_uncorrelated(dataset, "egger_univariable")
    if dataset.j < 3:
        raise ValueError(f"MR-Egger requires J >= 3 variants, got J={dataset.j}")
    reference = dataset.risk_factor_names[0]
    _require_oriented(dataset, reference)
    fit = fit_wls(dataset.beta_x_matrix(), dataset.beta_y_vector(),
                  _weight_spec(dataset, include_intercept=True))
    return _egger_result(dataset, fit, scheme, level, reference,
                         MethodTag("UE", scheme, "independent"))


def ivw_multivariable(dataset: SummaryDataset,
                      scheme: WeightScheme = DEFAULT_SCHEME,
                      level: float = 0.95) -> MRResult:
    """Multivariable IVW: zero-intercept regression on K columns (df = J - K).

    Each coefficient is the direct causal effect of its risk factor holding
    the others fixed. With K=1 this reduces exactly to the univariable
    estimator. Zero or collinear columns raise RankError rather than being
    dropped, because silently dropping a column changes every remaining
    coefficient from a direct to a total effect.
    """
    _check_level(level)
    _require_uncorrelated(dataset, "ivw_multivariable")
    if dataset.j <= dataset.k:
        raise ValueError(
            f"need J > K for the intercept-free model, got J={dataset.j}, "
            f"K={dataset.k}")
    fit = fit_wls(dataset.beta_x_matrix(), dataset.beta_y_vector(),
                  _weight_spec(dataset, include_intercept=False))
    se = scaled_se(fit, scheme)
    tag = MethodTag("MI", scheme, "independent")
    estimates = tuple(
        _estimate(name, fit.coefficients[i], se[i], fit.df_residual, tag, level)
        for i, name in enumerate(dataset.risk_factor_names))
    return MRResult(estimates=estimates, intercept=None,
                    residual_scale=fit.residual_scale)


def egger_multivariable(dataset: SummaryDataset, reference: str,
                        scheme: WeightScheme = DEFAULT_SCHEME,
                        level: float = 0.95) -> MRResult:
    """Multivariable MR-Egger: K columns plus intercept (df = J - (K + 1)).

    The dataset must be orientation-normalized with respect to ``reference``
    (the risk factor of primary interest): all its associations non-negative,
    with the other columns and the outcome recoded consistently per variant.
    """
    _check_level(level)
    _require_uncorrelated(dataset, "egger_multivariable")
    _require_oriented(dataset, reference)
    if dataset.j < dataset.k + 2:
        raise ValueError(
            f"multivariable MR-Egger requires J >= K + 2, got J={dataset.j}, "
            f"K={dataset.k}")
    fit = fit_wls(dataset.beta_x_matrix(), dataset.beta_y_vector(),
                  _weight_spec(dataset, include_intercept=True))
    return _egger_result(dataset, fit, scheme, level, reference,
                         MethodTag("ME", scheme, "independent"))


def ivw_correlated(dataset: SummaryDataset,
                   scheme: WeightScheme = DEFAULT_SCHEME,
                   level: float = 0.95) -> MRResult:
    """IVW for correlated variants via generalized least squares.

    The error covariance is Omega_st = se_Ys * se_Yt * rho_st; with an
    identity correlation this reproduces the independent-variant estimator
    exactly. Works for any K >= 1 (df = J - K).
    """
    _check_level(level)
    _require_correlated(dataset, "ivw_correlated")
    if dataset.j <= dataset.k:
        raise ValueError(
            f"need J > K for the intercept-free model, got J={dataset.j}, "
            f"K={dataset.k}")
    fit = fit_gls(dataset.beta_x_matrix(), dataset.beta_y_vector(),
                  _error_covariance(dataset))
    se = scaled_se(fit, scheme)
    tag = MethodTag("MI" if dataset.k > 1 else "UI", scheme, "correlated")
    estimates = tuple(
        _estimate(name, fit.coefficients[i], se[i], fit.df_residual, tag, level)
        for i, name in enumerate(dataset.risk_factor_names))
    return MRResult(estimates=estimates, intercept=None,
                    residual_scale=fit.residual_scale)


def egger_correlated(dataset: SummaryDataset, reference: str,
                     scheme: WeightScheme = DEFAULT_SCHEME,
                     level: float = 0.95) -> MRResult:
    """MR-Egger for correlated variants via generalized least squares.

    Flagged experimental: the behaviour of the Egger intercept under variant
    correlation has not been characterized in depth, so treat results as
    exploratory. Requires an oriented dataset; note that orientation flips
    must be applied to the correlation matrix as well (orient() does this).
    """
    _check_level(level)
    _require_correlated(dataset, "egger_correlated")
    _require_oriented(dataset, reference)
    if dataset.j < dataset.k + 2:
        raise ValueError(
            f"MR-Egger requires J >= K + 2, got J={dataset.j}, K={dataset.k}")
    design = np.column_stack([np.ones(dataset.j), dataset.beta_x_matrix()])
    fit = fit_gls(design, dataset.beta_y_vector(), _error_covariance(dataset))
    tag = MethodTag("ME" if dataset.k > 1 else "UE", scheme, "correlated")
    return _egger_result(dataset, fit, scheme, level, reference, tag,
                         experimental=True)


def _egger_result(dataset: SummaryDataset, fit, scheme: WeightScheme,
                  level: float, reference: str, tag: MethodTag,
                  experimental: bool = False) -> MRResult:
    """Package an intercept-included fit: slope estimates + intercept test."""
    se = scaled_se(fit, scheme)
    estimates = tuple(
        _estimate(name, fit.coefficients[i + 1], se[i + 1], fit.df_residual,
                  tag, level)
        for i, name in enumerate(dataset.risk_factor_names))
    p_value, _, _ = _inference(fit.coefficients[0], se[0], fit.df_residual,
                               level)
    intercept = InterceptTest(theta_0=float(fit.coefficients[0]),
                              se=float(se[0]), p_value=p_value)
    return MRResult(estimates=estimates, intercept=intercept,
                    residual_scale=fit.residual_scale,
                    orientation_reference=reference,
                    experimental=experimental)


def inside_bias_oracle(true_alpha: np.ndarray, true_beta_x: np.ndarray,
                       weights: np.ndarray, target: int = 0) -> float:
    """Asymptotic bias of the Egger slope when direct effects are known.

    Given the realized per-variant direct effects ``true_alpha`` and the true
    risk-factor associations, returns the additive bias of the Egger estimate
    for the ``target`` risk factor (0-based column index):

    * K=1: weighted cov(alpha, x) / weighted var(x) — zero exactly when the
      instrument strength is uncorrelated with the direct effects (the InSIDE
      condition);
    * K=2: the same quantity after partialling the other column out of both,
      i.e. the target coefficient of the weighted population regression of
      alpha on the two columns.

    Larger K has no closed form here and raises ValueError.
    """
    alpha = np.asarray(true_alpha, dtype=float)
    beta_x = np.asarray(true_beta_x, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if beta_x.ndim == 1:
        beta_x = beta_x[:, None]
    if beta_x.ndim != 2 or beta_x.shape[1] not in (1, 2):
        raise ValueError("true_beta_x must have one or two columns")
    j, k = beta_x.shape
    if alpha.shape != (j,) or weights.shape != (j,):
        raise ValueError("true_alpha and weights must have length J")
    if not 0 <= target < k:
        raise ValueError(f"target index {target} out of range for K={k}")

    if k == 1:
        denominator = weighted_var(beta_x[:, 0], weights)
        if denominator == 0.0:
            raise ValueError("zero weighted variance of the target column")
        return weighted_cov(alpha, beta_x[:, 0], weights) / denominator

    x_target = beta_x[:, target]
    x_other = beta_x[:, 1 - target]
    var_target = weighted_var(x_target, weights)
    var_other = weighted_var(x_other, weights)
    cross = weighted_cov(x_target, x_other, weights)
    determinant = var_target * var_other - cross ** 2
    if determinant == 0.0:
        raise ValueError("weighted covariance of the columns is singular")
    return (weighted_cov(alpha, x_target, weights) * var_other
            - weighted_cov(alpha, x_other, weights) * cross) / determinant


def f_statistic(n: int, k: int, r2: float) -> float:
    """Instrument-strength F-statistic: ((n-k-1)/k) * (r2/(1-r2)).

    ``n`` participants, ``k`` variants, ``r2`` the proportion of risk-factor
    variance explained by the variants jointly.
    """
    if not 0.0 <= r2 < 1.0:
        raise ValueError(f"r2 must be in [0, 1), got {r2}")
    if n <= k + 1:
        raise ValueError(f"need n > k + 1, got n={n}, k={k}")
    return ((n - k - 1) / k) * (r2 / (1.0 - r2))
