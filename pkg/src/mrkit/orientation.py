"""Allele orientation for sign-convention-sensitive estimators.

Regression-through-the-origin estimators are invariant to per-variant sign
flips, but any estimator with an intercept is not: the intercept picks up an
arbitrary sign unless every variant is coded so that its association with a
chosen reference risk factor is non-negative. :func:`orient` recodes a dataset
to that convention, swapping effect/other alleles and negating every
association (all risk factors and the outcome) for flipped variants. Standard
errors are sign-free and unchanged. An attached variant correlation matrix is
sign-conjugated (rho'_st = s_s * s_t * rho_st) so that it continues to refer
to the recoded alleles.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .data import CorrelationMatrix, SummaryDataset

__all__ = ["OrientationReport", "orient"]


@dataclass(frozen=True)
class OrientationReport:
    """What :func:`orient` did: which variants flipped, which were ambiguous."""

    reference: str
    flipped_ids: tuple[str, ...]
    zero_ids: tuple[str, ...]

    @property
    def n_flipped(self) -> int:
        return len(self.flipped_ids)


def orient(dataset: SummaryDataset,
           reference: str) -> tuple[SummaryDataset, OrientationReport]:
    """Recode variants so the reference risk-factor association is >= 0.

    Variants whose reference association is exactly zero have no defined
    orientation; they are left as-is, reported in ``zero_ids``, and a warning
    is emitted because intercept-based estimates remain coding-dependent for
    those rows.
    """
    if reference not in dataset.risk_factor_names:
        raise ValueError(
            f"unknown risk factor {reference!r}; "
            f"expected one of {', '.join(dataset.risk_factor_names)}")
    ref_index = dataset.risk_factor_names.index(reference)

    flipped: list[str] = []
    zeros: list[str] = []
    signs = np.ones(dataset.j)
    variants = []
    for row, variant in enumerate(dataset.variants):
        ref_beta = variant.beta_x[ref_index]
        if ref_beta == 0.0:
            zeros.append(variant.variant_id)
            variants.append(variant)
            continue
        if ref_beta > 0.0:
            variants.append(variant)
            continue
        signs[row] = -1.0
        flipped.append(variant.variant_id)
        variants.append(replace(
            variant,
            effect_allele=variant.other_allele,
            other_allele=variant.effect_allele,
            beta_x=tuple(-b for b in variant.beta_x),
            beta_y=-variant.beta_y,
        ))

    if zeros:
        warnings.warn(
            f"{len(zeros)} variant(s) have a zero association with "
            f"{reference} and were left unoriented: {', '.join(zeros)}",
            UserWarning,
            stacklevel=2,
        )

    correlation = dataset.correlation
    if correlation is not None and flipped:
        conjugated = signs[:, None] * correlation.entries * signs[None, :]
        correlation = CorrelationMatrix(conjugated)

    oriented = SummaryDataset(
        risk_factor_names=dataset.risk_factor_names,
        variants=tuple(variants),
        correlation=correlation,
    )
    report = OrientationReport(
        reference=reference,
        flipped_ids=tuple(flipped),
        zero_ids=tuple(zeros),
    )
    return oriented, report
