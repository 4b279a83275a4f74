"""Instrument-strength diagnostics: first-stage F test and F-tail support."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.special

from ._linalg import DEFAULT_COND_LIMIT, qr_factor
from .exceptions import DataError
from .model import DesignBundle, TrialDataset

__all__ = ["FTestResult", "first_stage_f", "f_upper_tail", "f_statistic_nested"]


@dataclass(frozen=True)
class FTestResult:
    """F statistic for the joint significance of the excluded instruments."""

    f: float
    df1: int
    df2: int
    p: float


def f_upper_tail(f: float, df1: int, df2: int) -> float:
    """Upper tail probability of the F(df1, df2) distribution at ``f``.

    Computed through the regularized incomplete beta function:
    P(F > f) = I_{df2/(df2 + df1 f)}(df2/2, df1/2).
    """
    if df1 < 1 or df2 < 1:
        raise DataError(f"degrees of freedom must be >= 1, got ({df1}, {df2})")
    if not np.isfinite(f) or f < 0:
        raise DataError(f"F statistic must be finite and non-negative, got {f}")
    x = df2 / (df2 + df1 * float(f))
    return float(scipy.special.betainc(df2 / 2.0, df1 / 2.0, x))


def f_statistic_nested(
    response: np.ndarray,
    full: np.ndarray,
    restricted: np.ndarray,
    *,
    cond_limit: float = DEFAULT_COND_LIMIT,
):
    """F statistic comparing nested least-squares fits of ``response``.

    Returns (f, df1, df2) with df1 = the number of extra columns in the
    full design and df2 = its residual degrees of freedom.
    """
    response = np.asarray(response, dtype=float)
    full = np.asarray(full, dtype=float)
    restricted = np.asarray(restricted, dtype=float)
    n, p_full = full.shape
    q = p_full - restricted.shape[1]
    if q < 1:
        raise DataError("the full design adds no columns over the restricted one")
    df2 = n - p_full
    if df2 < 1:
        raise DataError(f"no residual degrees of freedom: n={n}, p={p_full}")
    ff = qr_factor(full, cond_limit=cond_limit, context="first-stage design")
    fr = qr_factor(restricted, cond_limit=cond_limit, context="restricted first-stage design")
    resid_full = response - ff.project(response)
    resid_restr = response - fr.project(response)
    rss_full = float(resid_full @ resid_full)
    rss_restr = float(resid_restr @ resid_restr)
    # Rounding can push the nested RSS difference a hair below zero.
    f = max(rss_restr - rss_full, 0.0) / q / (rss_full / df2)
    return f, q, df2


def first_stage_f(data: TrialDataset, bundle: DesignBundle, *, cond_limit: float = DEFAULT_COND_LIMIT) -> FTestResult:
    """First-stage F test of the excluded instruments.

    Regresses the mediator on the full instrument design and on the
    restricted design holding only the covariates and the treatment, and
    tests the joint contribution of the excluded block (the
    treatment-by-covariate interactions plus any external instruments).
    """
    if not bundle.z_excluded:
        raise DataError("no excluded instruments to test")
    mediator = bundle.v[:, bundle.m_index]
    kept = [j for j in range(bundle.z.shape[1]) if j not in bundle.z_excluded]
    f, df1, df2 = f_statistic_nested(
        mediator, bundle.z, bundle.z[:, kept], cond_limit=cond_limit
    )
    return FTestResult(f=f, df1=df1, df2=df2, p=f_upper_tail(f, df1, df2))
