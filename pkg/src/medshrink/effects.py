"""Assembly of the causal estimands from fitted models.

The total effect of treatment offer is always estimated by least squares
on the mediator-free design (x, r): randomization makes the treatment
exogenous there, so no instrumenting is needed regardless of which
estimator handles the mediation model.  The natural direct effect is the
treatment coefficient of the mediation model; the indirect effect is the
difference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import DEFAULT_COND_LIMIT
from .estimators import ols_fit
from .exceptions import DataError
from .model import CausalEffects, CoefficientVector, TrialDataset

__all__ = ["TotalEffectFit", "total_effect_fit", "natural_effects"]


@dataclass(frozen=True)
class TotalEffectFit:
    """Least-squares fit of the outcome on (x, r) with no mediator column."""

    theta: CoefficientVector
    theta_r: float
    cov: np.ndarray
    sigma2: float
    df: int


def total_effect_fit(data: TrialDataset, *, cond_limit: float = DEFAULT_COND_LIMIT) -> TotalEffectFit:
    """Estimate the total effect of treatment offer on the outcome."""
    design = np.column_stack([data.x, data.r])
    names = data.x_names + (data.treatment_name,)
    fit = ols_fit(data.y, design, names=names, cond_limit=cond_limit, tag="OLS")
    return TotalEffectFit(
        theta=fit.coef,
        theta_r=fit.coef.beta_r,
        cov=fit.cov,
        sigma2=fit.sigma2,
        df=fit.df,
    )


def natural_effects(theta_r: float, beta_r: float) -> CausalEffects:
    """Assemble total, natural direct, and natural indirect effects.

    te = theta_r, nde = beta_r, nie = theta_r - beta_r, so te = nde + nie
    holds to machine rounding for every estimator path.
    """
    theta_r = float(theta_r)
    beta_r = float(beta_r)
    if not (np.isfinite(theta_r) and np.isfinite(beta_r)):
        raise DataError("effects require finite inputs")
    return CausalEffects(te=theta_r, nde=beta_r, nie=theta_r - beta_r)
