"""Case-resampling bootstrap standard errors for coefficients and effects.

Rows are resampled i.i.d. with replacement and the full pipeline is refit
per replicate: designs are rebuilt, the total effect re-estimated, and for
the shrinkage estimator the weight is re-estimated too unless explicitly
frozen, so shrinkage uncertainty is part of every standard error.

Replicate resample indices are a pure function of (seed, replicate index),
independent of execution order, so serial and threaded runs agree bit for
bit; aggregation works on a replicate-indexed array.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .effects import natural_effects, total_effect_fit
from .estimators import HAUSMAN, SelectionProjection, ols_fit, spsl_fit, tsls_fit
from .exceptions import DataError, IdentifiabilityError
from .model import TrialDataset, build_designs

__all__ = ["BootstrapConfig", "BootstrapSummary", "bootstrap_se"]

#: Warn when more than this fraction of replicates fails.
FAILURE_WARN_FRACTION = 0.01


@dataclass(frozen=True)
class BootstrapConfig:
    """Resampling settings.

    estimator selects which mediation-model fit the pipeline uses; the
    shrinkage estimator accepts a projection and a cross-moment mode of
    its own.  freeze_alpha reuses the full-sample shrinkage weight in
    every replicate instead of re-estimating it (the default re-estimates).
    """

    b: int = 1000
    seed: int = 0
    estimator: str = "spsl"
    projection: SelectionProjection | None = None
    cse_mode: object = HAUSMAN
    cov_mode: str = "projected"
    clip_shrinkage: bool = True
    freeze_alpha: bool = False
    threads: int = 1
    keep_replicates: bool = False

    def __post_init__(self):
        if self.b < 1:
            raise DataError(f"bootstrap needs b >= 1 replicates, got {self.b}")
        if self.estimator not in ("ols", "tsls", "spsl"):
            raise DataError(f"unknown estimator {self.estimator!r}")
        if self.threads < 1:
            raise DataError("threads must be >= 1")


@dataclass(frozen=True)
class BootstrapSummary:
    """Per-quantity standard deviations over successful replicates."""

    se: dict[str, float]
    names: tuple[str, ...]
    n_replicates: int
    n_failed: int
    replicate_estimates: np.ndarray | None = None

    @property
    def n_successful(self) -> int:
        return self.n_replicates - self.n_failed


def _fit_quantities(data: TrialDataset, config: BootstrapConfig, frozen_alpha: float | None):
    """One full-pipeline fit; returns the quantity vector (coefs, te, nde, nie)."""
    bundle = build_designs(data)
    theta_r = total_effect_fit(data).theta_r
    if config.estimator == "ols":
        coef = ols_fit(data.y, bundle.v, names=bundle.v_names).coef
    elif config.estimator == "tsls":
        coef = tsls_fit(data.y, bundle, cov_mode=config.cov_mode, warn_weak=False).coef
    else:
        if frozen_alpha is None:
            coef = spsl_fit(
                data.y,
                bundle,
                p=config.projection,
                cse_mode=config.cse_mode,
                clip_shrinkage=config.clip_shrinkage,
                cov_mode=config.cov_mode,
            ).coef
        else:
            ols = ols_fit(data.y, bundle.v, names=bundle.v_names)
            tsls = tsls_fit(data.y, bundle, cov_mode=config.cov_mode, warn_weak=False)
            values = frozen_alpha * tsls.coef.values + (1.0 - frozen_alpha) * ols.coef.values
            coef = type(ols.coef)(values=values, names=bundle.v_names)
    eff = natural_effects(theta_r, coef.beta_r)
    return np.concatenate([coef.values, [eff.te, eff.nde, eff.nie]])


def bootstrap_se(data: TrialDataset, config: BootstrapConfig) -> BootstrapSummary:
    """Bootstrap standard errors of all coefficients and causal effects.

    Returns the sample standard deviation (divisor: successes - 1) of each
    coefficient and of te/nde/nie over the successful replicates.
    Replicates whose resampled design loses identifiability are dropped
    and counted, with a warning when they exceed 1% of b.

    Raises
    ------
    DataError
        If every replicate fails, or the full-sample fit itself fails.
    """
    n = data.n
    # Fail fast (and obtain the frozen weight when requested) on the full sample.
    frozen_alpha = None
    if config.estimator == "spsl" and config.freeze_alpha:
        bundle = build_designs(data)
        frozen_alpha = spsl_fit(
            data.y,
            bundle,
            p=config.projection,
            cse_mode=config.cse_mode,
            clip_shrinkage=config.clip_shrinkage,
            cov_mode=config.cov_mode,
        ).alpha_hat
    baseline = _fit_quantities(data, config, frozen_alpha)
    names = build_designs(data).v_names + ("te", "nde", "nie")
    q = baseline.shape[0]

    results = np.full((config.b, q), np.nan)

    def one_replicate(r: int):
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(r,)))
        idx = rng.integers(0, n, size=n)
        try:
            results[r] = _fit_quantities(data.take(idx), config, frozen_alpha)
        except (IdentifiabilityError, DataError):
            pass  # row left as NaN and counted below

    if config.threads == 1:
        for r in range(config.b):
            one_replicate(r)
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            list(pool.map(one_replicate, range(config.b)))

    ok = np.all(np.isfinite(results), axis=1)
    n_ok = int(ok.sum())
    n_failed = config.b - n_ok
    if n_ok == 0:
        raise DataError("all bootstrap replicates failed")
    if n_failed > FAILURE_WARN_FRACTION * config.b:
        warnings.warn(
            f"{n_failed}/{config.b} bootstrap replicates failed identifiability",
            stacklevel=2,
        )
    if n_ok > 1:
        se_values = results[ok].std(axis=0, ddof=1)
    else:
        se_values = np.zeros(q)
    se = {name: float(s) for name, s in zip(names, se_values)}
    return BootstrapSummary(
        se=se,
        names=names,
        n_replicates=config.b,
        n_failed=n_failed,
        replicate_estimates=results if config.keep_replicates else None,
    )
