"""Synthetic confounded-mediation data and the Monte Carlo scenario grid.

The generator draws one standardized covariate x ~ N(0, 2), a Bernoulli(1/2)
treatment offer r, a latent confounder u ~ N(0, 1), and builds

    m = gamma_x*x + gamma_r*r + gamma_rx*r*x + gamma_u*u + delta
    y = beta_x*x + beta_r*r + beta_m*m + beta_u*u + eps

with independent Gaussian errors whose variances are chosen in closed form
so that Var(m) = Var(y) = 1.  Two scenario knobs parameterize the grid:
eta = Cor(m, u) (confounding strength, equal to gamma_u) and
kappa = Cor(m, r*x) (instrument strength, equal to gamma_x + gamma_rx).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .effects import natural_effects, total_effect_fit
from .estimators import HAUSMAN, SelectionProjection, ols_fit, spsl_fit, tsls_fit
from .exceptions import IdentifiabilityError, InfeasibleScenarioError
from .model import CausalEffects, CoefficientVector, TrialDataset, build_designs

__all__ = [
    "ScenarioSpec",
    "GridCell",
    "GridSummary",
    "error_variances",
    "generate_dataset",
    "population_ols_oracle",
    "true_effects",
    "run_grid",
    "DEFAULT_ETAS",
    "DEFAULT_KAPPAS",
    "DEFAULT_NS",
]

DEFAULT_ETAS = (0.0, 0.25, 0.5)
DEFAULT_KAPPAS = (0.01, 0.25, 0.5)
DEFAULT_NS = (100, 300, 500)
ESTIMATORS = ("ols", "tsls", "spsl")
ESTIMANDS = ("nde", "nie")


@dataclass(frozen=True)
class ScenarioSpec:
    """One cell of the simulation design.

    eta is the mediator-confounder correlation (0 disables confounding);
    kappa is the mediator-instrument correlation and must be positive so
    the instrumented fit stays identified.  The structural coefficients
    default to the standardized small-to-moderate effect sizes used
    throughout the study.
    """

    eta: float
    kappa: float
    n: int
    beta_x: float = 0.25
    beta_r: float = 0.25
    beta_m: float = 0.25
    beta_u: float = 0.25
    gamma_x: float = 0.25
    gamma_r: float = 1.0 / math.sqrt(2.0)

    def __post_init__(self):
        if not 0.0 <= self.eta <= 0.5:
            raise InfeasibleScenarioError(
                f"eta must lie in [0, 0.5], got {self.eta}"
            )
        if not 0.0 < self.kappa <= 0.5:
            raise InfeasibleScenarioError(
                f"kappa must lie in (0, 0.5], got {self.kappa}; "
                "a zero mediator-instrument correlation leaves the "
                "instrumented fit unidentified"
            )
        if self.n < 1:
            raise InfeasibleScenarioError(f"n must be positive, got {self.n}")
        error_variances(self)  # raises when either variance is non-positive

    @property
    def gamma_u(self) -> float:
        return self.eta

    @property
    def gamma_rx(self) -> float:
        return self.kappa - self.gamma_x


def error_variances(spec: ScenarioSpec) -> tuple[float, float]:
    """Closed-form error variances (sigma2_delta, sigma2_eps).

    Derived from Var(m) = 1 and Var(y) = 1 using Var(x) = 2, Var(r) = 1/4,
    Var(r*x) = 1, Cov(x, r*x) = 1, Cov(r, r*x) = 0, and u independent of
    (x, r, r*x):

        sigma2_delta = 1 - (2 gx^2 + gr^2/4 + grx^2 + gu^2 + 2 grx gx)
        sigma2_eps   = 1 - (2 bx^2 + br^2/4 + bm^2 + bu^2 + C)
        C = 2 bx bm (2 gx + grx) + br bm gr / 2 + 2 bm bu gu

    Note the confounder loading enters the mediator variance through its
    square.
    """
    gx, gr, grx, gu = spec.gamma_x, spec.gamma_r, spec.gamma_rx, spec.gamma_u
    bx, br, bm, bu = spec.beta_x, spec.beta_r, spec.beta_m, spec.beta_u
    sigma2_delta = 1.0 - (2.0 * gx**2 + gr**2 / 4.0 + grx**2 + gu**2 + 2.0 * grx * gx)
    cross = 2.0 * bx * bm * (2.0 * gx + grx) + br * bm * gr / 2.0 + 2.0 * bm * bu * gu
    sigma2_eps = 1.0 - (2.0 * bx**2 + br**2 / 4.0 + bm**2 + bu**2 + cross)
    if sigma2_delta <= 0.0:
        raise InfeasibleScenarioError(
            f"mediator error variance is not positive ({sigma2_delta:.4f}); "
            "with default coefficients feasibility requires gamma_u <= 1/2 "
            "and gamma_x + gamma_rx <= 1/2"
        )
    if sigma2_eps <= 0.0:
        raise InfeasibleScenarioError(
            f"outcome error variance is not positive ({sigma2_eps:.4f}); "
            "with default coefficients feasibility requires gamma_u <= 1/2 "
            "and gamma_x + gamma_rx <= 1/2"
        )
    return sigma2_delta, sigma2_eps


def generate_dataset(spec: ScenarioSpec, seed: int, replicate_index: int = 0) -> TrialDataset:
    """Draw one synthetic dataset; a pure function of (spec, seed, replicate).

    Streams are split by keying the generator on (seed, replicate_index),
    so parallel and serial replications agree draw for draw.  The latent
    confounder is returned on the dataset for oracle checks but is never
    part of an estimation design.
    """
    sigma2_delta, sigma2_eps = error_variances(spec)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(replicate_index,)))
    n = spec.n
    x1 = rng.normal(0.0, math.sqrt(2.0), size=n)
    r = rng.integers(0, 2, size=n).astype(float)
    u = rng.normal(0.0, 1.0, size=n)
    delta = rng.normal(0.0, math.sqrt(sigma2_delta), size=n)
    eps = rng.normal(0.0, math.sqrt(sigma2_eps), size=n)
    m = (
        spec.gamma_x * x1
        + spec.gamma_r * r
        + spec.gamma_rx * r * x1
        + spec.gamma_u * u
        + delta
    )
    y = spec.beta_x * x1 + spec.beta_r * r + spec.beta_m * m + spec.beta_u * u + eps
    x = np.column_stack([np.ones(n), x1])
    return TrialDataset(y=y, r=r, m=m, x=x, u=u, x_names=("const", "x"))


def true_effects(spec: ScenarioSpec) -> CausalEffects:
    """Population causal effects: nde = beta_r, nie = beta_m * gamma_r.

    The interaction loading does not enter the indirect effect because the
    covariate is centered.
    """
    return natural_effects(
        theta_r=spec.beta_r + spec.beta_m * spec.gamma_r, beta_r=spec.beta_r
    )


def _population_moments(spec: ScenarioSpec):
    """Second moments of (1, x, m, r) and their cross moments with y."""
    gx, gr, grx, gu = spec.gamma_x, spec.gamma_r, spec.gamma_rx, spec.gamma_u
    bx, br, bm, bu = spec.beta_x, spec.beta_r, spec.beta_m, spec.beta_u
    e_m = gr / 2.0
    e_xm = 2.0 * gx + grx          # E[x*m]; Var(x) = 2, Cov(x, r*x) = 1
    e_m2 = 1.0 + e_m**2            # Var(m) = 1 by construction
    e_mr = gr / 2.0                # E[m*r] = gr * E[r^2]
    e_mu = gu                      # Cov(m, u), u standard normal
    gram = np.array(
        [
            [1.0, 0.0, e_m, 0.5],
            [0.0, 2.0, e_xm, 0.0],
            [e_m, e_xm, e_m2, e_mr],
            [0.5, 0.0, e_mr, 0.5],
        ]
    )
    e_y = br / 2.0 + bm * e_m
    rhs = np.array(
        [
            e_y,
            2.0 * bx + bm * e_xm,
            bx * e_xm + br * e_mr + bm * e_m2 + bu * e_mu,
            br / 2.0 + bm * e_mr,
        ]
    )
    return gram, rhs


def population_ols_oracle(spec: ScenarioSpec) -> CoefficientVector:
    """Probability limit of the least-squares mediation fit.

    Solves the population normal equations E[vv']b = E[vy] with the exact
    second moments implied by the generator; used as the analytic target
    for bias-direction checks on the naive fit.
    """
    gram, rhs = _population_moments(spec)
    try:
        values = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as err:
        raise IdentifiabilityError(f"population Gram matrix is singular: {err}") from err
    return CoefficientVector(values=values, names=("const", "x", "m", "r"))


@dataclass(frozen=True)
class GridCell:
    """Monte Carlo summary for one (scenario, estimator, estimand)."""

    eta: float
    kappa: float
    n: int
    estimator: str
    estimand: str
    mean: float
    bias: float
    rmse: float
    mc_se: float
    n_reps: int
    n_failed: int


@dataclass(frozen=True)
class GridSummary:
    """All cells of a grid run, plus optional per-replicate estimates."""

    cells: tuple[GridCell, ...]
    replications: int
    seed: int
    replicates: dict | None = None

    def cell(self, eta: float, kappa: float, n: int, estimator: str, estimand: str) -> GridCell:
        for c in self.cells:
            if (
                c.eta == eta
                and c.kappa == kappa
                and c.n == n
                and c.estimator == estimator
                and c.estimand == estimand
            ):
                return c
        raise KeyError(f"no cell ({eta}, {kappa}, {n}, {estimator}, {estimand})")


def _summaries(draws: np.ndarray, truth: float):
    ok = np.isfinite(draws)
    n_ok = int(ok.sum())
    vals = draws[ok]
    mean = float(vals.mean()) if n_ok else math.nan
    bias = mean - truth
    rmse = float(np.sqrt(np.mean((vals - truth) ** 2))) if n_ok else math.nan
    mc_se = float(vals.std(ddof=1) / math.sqrt(n_ok)) if n_ok > 1 else math.nan
    return mean, bias, rmse, mc_se, n_ok


def run_grid(
    etas=DEFAULT_ETAS,
    kappas=DEFAULT_KAPPAS,
    ns=DEFAULT_NS,
    replications: int = 2000,
    seed: int = 0,
    estimators=ESTIMATORS,
    *,
    cse_mode=HAUSMAN,
    cov_mode: str = "projected",
    clip_shrinkage: bool = True,
    keep_replicates: bool = False,
) -> GridSummary:
    """Monte Carlo comparison of the three estimators over a scenario grid.

    Per replicate, one dataset is drawn, the total effect is fitted once,
    the mediation model is fitted by each requested estimator, and the
    natural effects are derived per estimator.  Cells aggregate mean, bias
    against the known truth, root-mean-squared error, and the Monte Carlo
    standard error of the mean.  Replicates where a fit loses
    identifiability are dropped and counted per estimator; extreme draws
    from weakly identified fits are retained as-is.
    """
    estimators = tuple(estimators)
    unknown = set(estimators) - set(ESTIMATORS)
    if unknown:
        raise InfeasibleScenarioError(f"unknown estimators: {sorted(unknown)}")
    cells = []
    replicate_dump = {} if keep_replicates else None
    for eta in etas:
        for kappa in kappas:
            for n in ns:
                spec = ScenarioSpec(eta=eta, kappa=kappa, n=n)
                truths = true_effects(spec)
                draws = {
                    (est, q): np.full(replications, np.nan)
                    for est in estimators
                    for q in ESTIMANDS
                }
                failures = {est: 0 for est in estimators}
                for rep in range(replications):
                    data = generate_dataset(spec, seed, rep)
                    bundle = build_designs(data)
                    theta_r = total_effect_fit(data).theta_r
                    fits = {}
                    if "ols" in estimators or "spsl" in estimators:
                        try:
                            fits["ols"] = ols_fit(data.y, bundle.v, names=bundle.v_names)
                        except IdentifiabilityError:
                            fits["ols"] = None
                    if "tsls" in estimators or "spsl" in estimators:
                        try:
                            fits["tsls"] = tsls_fit(
                                data.y, bundle, cov_mode=cov_mode, warn_weak=False
                            )
                        except IdentifiabilityError:
                            fits["tsls"] = None
                    for est in estimators:
                        beta_r = None
                        if est in ("ols", "tsls"):
                            fit = fits.get(est)
                            beta_r = None if fit is None else fit.coef.beta_r
                        else:
                            if fits.get("ols") is not None and fits.get("tsls") is not None:
                                combo = spsl_fit(
                                    data.y,
                                    bundle,
                                    cse_mode=cse_mode,
                                    clip_shrinkage=clip_shrinkage,
                                    cov_mode=cov_mode,
                                    ols=fits["ols"],
                                    tsls=fits["tsls"],
                                )
                                beta_r = combo.coef.beta_r
                        if beta_r is None:
                            failures[est] += 1
                            continue
                        eff = natural_effects(theta_r, beta_r)
                        draws[(est, "nde")][rep] = eff.nde
                        draws[(est, "nie")][rep] = eff.nie
                for est in estimators:
                    for q in ESTIMANDS:
                        truth = truths.nde if q == "nde" else truths.nie
                        mean, bias, rmse, mc_se, n_ok = _summaries(draws[(est, q)], truth)
                        cells.append(
                            GridCell(
                                eta=eta,
                                kappa=kappa,
                                n=n,
                                estimator=est,
                                estimand=q,
                                mean=mean,
                                bias=bias,
                                rmse=rmse,
                                mc_se=mc_se,
                                n_reps=n_ok,
                                n_failed=failures[est],
                            )
                        )
                        if keep_replicates:
                            replicate_dump[(eta, kappa, n, est, q)] = draws[(est, q)].copy()
    return GridSummary(
        cells=tuple(cells),
        replications=replications,
        seed=seed,
        replicates=replicate_dump,
    )
