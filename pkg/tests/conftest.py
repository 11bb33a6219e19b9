"""Shared builders for the test suite."""
from __future__ import annotations

import numpy as np

from mrkit import CorrelationMatrix, SummaryDataset, VariantRecord


def make_dataset(beta_x, beta_y, se_y, names=("x1",), corr=None,
                 se_x=None) -> SummaryDataset:
    """Build a dataset from plain arrays; beta_x is (J,) or (J, K)."""
    beta_x = np.atleast_2d(np.asarray(beta_x, dtype=float))
    if beta_x.shape[0] == 1 and len(beta_y) > 1:
        beta_x = beta_x.T
    j, k = beta_x.shape
    if se_x is None:
        se_x = np.ones((j, k))
    else:
        se_x = np.broadcast_to(np.asarray(se_x, dtype=float), (j, k))
    variants = tuple(
        VariantRecord(
            variant_id=f"v{i}",
            effect_allele="A",
            other_allele="G",
            beta_x=tuple(float(b) for b in beta_x[i]),
            se_x=tuple(float(s) for s in se_x[i]),
            beta_y=float(beta_y[i]),
            se_y=float(se_y[i]),
        )
        for i in range(j))
    correlation = CorrelationMatrix(corr) if corr is not None else None
    return SummaryDataset(risk_factor_names=tuple(names), variants=variants,
                          correlation=correlation)


def random_dataset(rng: np.random.Generator, j: int, k: int = 1,
                   positive_x: bool = False, corr: bool = False) -> SummaryDataset:
    """Random well-conditioned dataset for property checks."""
    beta_x = rng.normal(0.2, 0.5, size=(j, k))
    if positive_x:
        beta_x[:, 0] = np.abs(beta_x[:, 0]) + 0.05
    beta_y = rng.normal(0.0, 0.4, size=j)
    se_y = rng.uniform(0.3, 2.0, size=j)
    correlation = random_correlation(rng, j) if corr else None
    return make_dataset(beta_x, beta_y, se_y,
                        names=tuple(f"x{i + 1}" for i in range(k)),
                        corr=correlation)


def random_correlation(rng: np.random.Generator, j: int) -> np.ndarray:
    """Random strictly positive-definite correlation matrix."""
    a = rng.normal(size=(j, j + 2))
    cov = a @ a.T + np.eye(j) * 0.5
    d = np.sqrt(np.diag(cov))
    return cov / np.outer(d, d)
