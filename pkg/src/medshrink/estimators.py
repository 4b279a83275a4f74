"""Core estimation: OLS, two-stage least squares, and the shrinkage combination.

Three fits of the same mediation design are provided.  ``ols_fit`` is the
efficient but confounding-prone least-squares fit.  ``tsls_fit`` replaces
the regressors with their projection onto the instrument span, trading
variance for consistency when the mediator is endogenous.  ``spsl_fit``
forms a data-driven affine combination of the two: the consistent TSLS fit
is pulled toward the efficient OLS fit by an estimated shrinkage weight,
so that the combination tracks OLS when the instruments carry little
information and tracks TSLS when the observed disagreement between the two
fits is too large to be sampling noise.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from ._linalg import DEFAULT_COND_LIMIT, qr_factor, residual_sum_of_squares
from .diagnostics import f_statistic_nested
from .exceptions import DataError, DegenerateCombinationError, WeakInstrumentWarning
from .model import CoefficientVector, DesignBundle

__all__ = [
    "FitResult",
    "SelectionProjection",
    "SpslResult",
    "HAUSMAN",
    "BootstrapCse",
    "ols_fit",
    "first_stage_project",
    "tsls_fit",
    "estimate_alpha",
    "spsl_fit",
    "closed_form_alpha",
]

logger = logging.getLogger(__name__)

#: Conventional first-stage F threshold below which instruments are flagged weak.
WEAK_F_THRESHOLD = 10.0


@dataclass(frozen=True)
class FitResult:
    """A fitted linear model with its estimated coefficient covariance.

    ``sigma2`` is the residual variance estimate RSS/df with df = n - p
    (p = k + 2 for the mediation design), and ``cov`` is sigma2 times the
    inverse Gram matrix of the fitting design.
    """

    coef: CoefficientVector
    sigma2: float
    cov: np.ndarray
    df: int
    tag: str

    def __post_init__(self):
        cov = np.asarray(self.cov, dtype=float)
        cov.setflags(write=False)
        object.__setattr__(self, "cov", cov)


@dataclass(frozen=True)
class SelectionProjection:
    """Diagonal 0/1 projection selecting the coefficients that drive shrinkage.

    As a matrix P it is diagonal with ones exactly at the selected indices,
    so P @ P = P and P.T = P.  The default selection elsewhere in the
    package is the treatment coefficient alone (the last position).
    """

    selected: tuple[int, ...]

    def __post_init__(self):
        sel = tuple(sorted(set(int(i) for i in self.selected)))
        if not sel:
            raise DataError("projection must select at least one coefficient")
        if sel[0] < 0:
            raise DataError("projection indices must be non-negative")
        object.__setattr__(self, "selected", sel)

    def indices(self, dim: int) -> np.ndarray:
        if self.selected[-1] >= dim:
            raise DataError(
                f"projection selects index {self.selected[-1]} "
                f"but the coefficient vector has length {dim}"
            )
        return np.asarray(self.selected, dtype=int)

    def matrix(self, dim: int) -> np.ndarray:
        p = np.zeros((dim, dim))
        idx = self.indices(dim)
        p[idx, idx] = 1.0
        return p

    @classmethod
    def treatment_only(cls, bundle: DesignBundle) -> "SelectionProjection":
        return cls((bundle.r_index,))


#: Cross-moment estimated through the identity that the covariance between
#: the efficient fit and any consistent fit equals the efficient fit's
#: variance, giving tau = tr_P var(TSLS) - tr_P var(OLS).
HAUSMAN = "hausman"


@dataclass(frozen=True)
class BootstrapCse:
    """Model-free cross-moment: resample rows, refit both estimators jointly,
    and use the empirical cross-covariance of the two coefficient vectors."""

    b: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.b < 2:
            raise DataError("bootstrap cross-moment needs at least 2 replicates")


@dataclass(frozen=True)
class AlphaEstimate:
    """Raw shrinkage ratio tau_hat/denom and its two ingredients.

    ``alpha_hat`` estimates the weight that an MSE-optimal affine
    combination would place on the efficient (OLS) fit; ``spsl_fit``
    applies ``1 - alpha_hat`` as the weight on the TSLS fit.
    """

    alpha_hat: float
    tau_hat: float
    denom: float


@dataclass(frozen=True)
class SpslResult:
    """The shrinkage combination together with everything that produced it.

    ``alpha_hat`` is the affine weight on the TSLS coefficients, so that
    ``coef = alpha_hat * tsls.coef + (1 - alpha_hat) * ols.coef`` holds
    elementwise by construction.
    """

    coef: CoefficientVector
    alpha_hat: float
    tau_hat: float
    denom: float
    ols: FitResult
    tsls: FitResult
    projection: SelectionProjection


def ols_fit(
    y: np.ndarray,
    design: np.ndarray,
    *,
    names: tuple[str, ...] | None = None,
    cond_limit: float = DEFAULT_COND_LIMIT,
    tag: str = "OLS",
) -> FitResult:
    """Least-squares fit via a pivoted QR factorization.

    Parameters
    ----------
    y : ndarray of shape (n,)
    design : ndarray of shape (n, p)
        Full-column-rank design matrix.
    names : tuple of str, optional
        Coefficient labels; defaults to positional labels.

    Returns
    -------
    FitResult
        With sigma2 = RSS/(n - p) and cov = sigma2 * (design' design)^{-1}.

    Raises
    ------
    IdentifiabilityError
        If the design is rank-deficient at the condition limit.
    DataError
        If there are no residual degrees of freedom.
    """
    y = np.asarray(y, dtype=float)
    design = np.asarray(design, dtype=float)
    n, p = design.shape
    if y.shape[0] != n:
        raise DataError("outcome and design row counts differ")
    df = n - p
    if df < 1:
        raise DataError(f"no residual degrees of freedom: n={n}, p={p}")
    if names is None:
        names = tuple(f"b{j}" for j in range(p))
    factor = qr_factor(design, cond_limit=cond_limit, context="regression design", names=names)
    beta = factor.solve(y)
    sigma2 = residual_sum_of_squares(y, design, beta) / df
    cov = sigma2 * factor.gram_inverse()
    return FitResult(
        coef=CoefficientVector(values=beta, names=tuple(names)),
        sigma2=sigma2,
        cov=cov,
        df=df,
        tag=tag,
    )


def first_stage_project(v: np.ndarray, z: np.ndarray, *, cond_limit: float = DEFAULT_COND_LIMIT) -> np.ndarray:
    """Columnwise orthogonal projection of ``v`` onto the span of ``z``.

    Columns of ``v`` already inside span(z) are reproduced up to rounding.
    """
    v = np.asarray(v, dtype=float)
    z = np.asarray(z, dtype=float)
    if v.shape[0] != z.shape[0]:
        raise DataError("v and z row counts differ")
    factor = qr_factor(
        z,
        cond_limit=cond_limit,
        context="instrument design (full-rank instrument cross-moments required)",
    )
    return factor.project(v)


def tsls_fit(
    y: np.ndarray,
    bundle: DesignBundle,
    *,
    cov_mode: str = "projected",
    cond_limit: float = DEFAULT_COND_LIMIT,
    weak_f_threshold: float = WEAK_F_THRESHOLD,
    warn_weak: bool = True,
) -> FitResult:
    """Two-stage least squares on a design bundle.

    The second-stage regressors are replaced by their projection onto the
    instrument span and the coefficients solve the projected least-squares
    problem.  Residuals for the variance estimate are always taken against
    the original (unprojected) regressors.

    Parameters
    ----------
    y : ndarray of shape (n,)
    bundle : DesignBundle
    cov_mode : {"projected", "unprojected"}
        "projected" (default) scales the inverse Gram of the projected
        design, the standard instrumental-variables form.  "unprojected"
        scales the inverse Gram of the original design instead, which
        mirrors the OLS line; it is retained as a documented alternative.
    weak_f_threshold : float
        Attach a WeakInstrumentWarning when the first-stage F statistic of
        the excluded instrument block falls below this value.
    warn_weak : bool
        Disable the warning check in tight Monte Carlo loops.

    Raises
    ------
    IdentifiabilityError
        If the instrument design or the projected design is rank-deficient;
        both amount to a failure of the full-rank instrument cross-moment
        requirement that identifies the estimator.
    """
    y = np.asarray(y, dtype=float)
    v, z = bundle.v, bundle.z
    n, p = v.shape
    if y.shape[0] != n:
        raise DataError("outcome and design row counts differ")
    df = n - p
    if df < 1:
        raise DataError(f"no residual degrees of freedom: n={n}, p={p}")

    zf = qr_factor(
        z,
        cond_limit=cond_limit,
        context="instrument design (full-rank instrument cross-moments required)",
        names=bundle.z_names,
    )
    vhat = zf.project(v)
    vf = qr_factor(
        vhat,
        cond_limit=cond_limit,
        context="projected second-stage design (instruments may not identify the mediator)",
        names=bundle.v_names,
    )
    beta = vf.solve(y)
    sigma2 = residual_sum_of_squares(y, v, beta) / df
    if cov_mode == "projected":
        cov = sigma2 * vf.gram_inverse()
    elif cov_mode == "unprojected":
        orig = qr_factor(v, cond_limit=cond_limit, context="second-stage design", names=bundle.v_names)
        cov = sigma2 * orig.gram_inverse()
    else:
        raise DataError(f"unknown cov_mode {cov_mode!r}")

    if warn_weak and bundle.z_excluded:
        kept = [j for j in range(z.shape[1]) if j not in bundle.z_excluded]
        f_stat, _, _ = f_statistic_nested(v[:, bundle.m_index], z, z[:, kept])
        if f_stat < weak_f_threshold:
            warnings.warn(
                f"weak instruments: first-stage F = {f_stat:.2f} "
                f"below threshold {weak_f_threshold:g}",
                WeakInstrumentWarning,
                stacklevel=2,
            )

    return FitResult(
        coef=CoefficientVector(values=beta, names=bundle.v_names),
        sigma2=sigma2,
        cov=cov,
        df=df,
        tag="TSLS",
    )


def _check_aligned(ols: FitResult, tsls: FitResult):
    if ols.coef.names != tsls.coef.names:
        raise DataError("OLS and TSLS fits do not share a design column order")


def _bootstrap_cross_moments(
    y: np.ndarray,
    bundle: DesignBundle,
    idx: np.ndarray,
    mode: BootstrapCse,
    cond_limit: float,
):
    """Joint pairs bootstrap of the two fits; returns (var_tsls, cse) traces
    over the selected coordinates."""
    n = bundle.n
    ols_draws = np.full((mode.b, idx.size), np.nan)
    tsls_draws = np.full((mode.b, idx.size), np.nan)
    ok = np.zeros(mode.b, dtype=bool)
    for b in range(mode.b):
        rng = np.random.default_rng(np.random.SeedSequence(mode.seed, spawn_key=(b,)))
        rows = rng.integers(0, n, size=n)
        vb, zb, yb = bundle.v[rows], bundle.z[rows], y[rows]
        try:
            fo = qr_factor(vb, cond_limit=cond_limit, context="resampled design")
            fz = qr_factor(zb, cond_limit=cond_limit, context="resampled instruments")
            vhat = fz.project(vb)
            ft = qr_factor(vhat, cond_limit=cond_limit, context="resampled projected design")
        except Exception:
            continue
        ols_draws[b] = fo.solve(yb)[idx]
        tsls_draws[b] = ft.solve(yb)[idx]
        ok[b] = True
    n_ok = int(ok.sum())
    if n_ok < 2:
        raise DataError("bootstrap cross-moment failed: fewer than 2 usable replicates")
    o = ols_draws[ok] - ols_draws[ok].mean(axis=0)
    t = tsls_draws[ok] - tsls_draws[ok].mean(axis=0)
    var_tsls = float((t * t).sum() / (n_ok - 1))
    cse = float((t * o).sum() / (n_ok - 1))
    return var_tsls, cse


def estimate_alpha(
    ols: FitResult,
    tsls: FitResult,
    p: SelectionProjection,
    cse_mode=HAUSMAN,
    *,
    y: np.ndarray | None = None,
    bundle: DesignBundle | None = None,
    denom_tol: float | None = None,
    cond_limit: float = DEFAULT_COND_LIMIT,
) -> AlphaEstimate:
    """Estimate the shrinkage ratio from two fits of the same data.

    The ratio is tau_hat / denom, where denom is the squared Euclidean norm
    of the selected coordinates of (OLS - TSLS) and tau_hat is the trace,
    over the selected coordinates, of var(TSLS) minus the cross-moment
    between the two fits.  The ratio is returned unclamped and may fall
    outside [0, 1]: it estimates the weight an MSE-optimal combination
    would put on the efficient fit, and exceeds 1 when the observed
    disagreement between the fits is smaller than the noise gap.

    Parameters
    ----------
    cse_mode : HAUSMAN or BootstrapCse
        How the cross-moment is estimated.  The default uses the identity
        that the covariance between the efficient fit and any consistent
        fit is the efficient fit's variance.  BootstrapCse resamples rows
        and uses empirical cross-covariances; it requires ``y`` and
        ``bundle``.
    denom_tol : float, optional
        Degeneracy tolerance; defaults to 1e-12 * (1 + ||tsls.coef||^2).

    Raises
    ------
    DegenerateCombinationError
        When denom falls below the tolerance (the two fits agree on the
        selected coordinates); the caller decides how to resolve it.
    """
    _check_aligned(ols, tsls)
    dim = len(ols.coef.names)
    idx = p.indices(dim)
    diff = ols.coef.values[idx] - tsls.coef.values[idx]
    denom = float(diff @ diff)

    if cse_mode == HAUSMAN:
        tau_hat = float(
            np.sum(np.diag(tsls.cov)[idx]) - np.sum(np.diag(ols.cov)[idx])
        )
    elif isinstance(cse_mode, BootstrapCse):
        if y is None or bundle is None:
            raise DataError("bootstrap cross-moment needs y and the design bundle")
        var_tsls, cse = _bootstrap_cross_moments(
            np.asarray(y, dtype=float), bundle, idx, cse_mode, cond_limit
        )
        tau_hat = var_tsls - cse
    else:
        raise DataError(f"unknown cse_mode {cse_mode!r}")

    tol = denom_tol
    if tol is None:
        norm2 = float(tsls.coef.values @ tsls.coef.values)
        tol = 1e-12 * (1.0 + norm2)
    if denom < tol:
        raise DegenerateCombinationError(
            f"degenerate combination: ||P(ols - tsls)||^2 = {denom:.3e} "
            f"below tolerance {tol:.3e}",
            tau_hat=tau_hat,
            denom=denom,
        )
    return AlphaEstimate(alpha_hat=tau_hat / denom, tau_hat=tau_hat, denom=denom)


def spsl_fit(
    y: np.ndarray,
    bundle: DesignBundle,
    p: SelectionProjection | None = None,
    cse_mode=HAUSMAN,
    *,
    clip_shrinkage: bool = True,
    cov_mode: str = "projected",
    cond_limit: float = DEFAULT_COND_LIMIT,
    warn_weak: bool = False,
    ols: FitResult | None = None,
    tsls: FitResult | None = None,
) -> SpslResult:
    """Shrinkage combination of the OLS and TSLS fits of one dataset.

    Runs both fits, estimates the shrinkage ratio, and returns

        coef = alpha_hat * tsls.coef + (1 - alpha_hat) * ols.coef,

    where alpha_hat = 1 - ratio is the weight on the consistent TSLS fit.
    A ratio near 0 (fits disagree far beyond the noise gap) leaves the
    combination at TSLS; a ratio at or above 1 (disagreement within noise)
    moves it onto OLS.

    Parameters
    ----------
    p : SelectionProjection, optional
        Coordinates driving the shrinkage weight; defaults to the
        treatment coefficient alone.
    clip_shrinkage : bool
        Clip the ratio into [0, 1] before forming the combination
        (default).  The raw ratio is preserved in ``tau_hat``/``denom``.
        Disabling the clip lets the combination extrapolate beyond the
        OLS-TSLS segment, which inflates its mean squared error badly
        whenever instruments are weak; see the simulation study.
    ols, tsls : FitResult, optional
        Reuse fits already computed on exactly this (y, bundle).

    Notes
    -----
    On a degenerate denominator (the fits agree on the selected
    coordinates) the combination resolves to the TSLS endpoint,
    alpha_hat = 1, since only TSLS carries a consistency guarantee with
    an endogenous mediator.
    """
    if p is None:
        p = SelectionProjection.treatment_only(bundle)
    if ols is None:
        ols = ols_fit(y, bundle.v, names=bundle.v_names, cond_limit=cond_limit)
    if tsls is None:
        tsls = tsls_fit(y, bundle, cov_mode=cov_mode, cond_limit=cond_limit, warn_weak=warn_weak)
    try:
        est = estimate_alpha(
            ols, tsls, p, cse_mode, y=y, bundle=bundle, cond_limit=cond_limit
        )
        ratio = est.alpha_hat
        tau_hat, denom = est.tau_hat, est.denom
        if clip_shrinkage:
            ratio = min(max(ratio, 0.0), 1.0)
        alpha_hat = 1.0 - ratio
    except DegenerateCombinationError as err:
        logger.info("shrinkage denominator degenerate; resolving to the TSLS endpoint")
        tau_hat, denom = err.tau_hat, err.denom
        alpha_hat = 1.0
    values = alpha_hat * tsls.coef.values + (1.0 - alpha_hat) * ols.coef.values
    coef = CoefficientVector(values=values, names=bundle.v_names)
    return SpslResult(
        coef=coef,
        alpha_hat=alpha_hat,
        tau_hat=tau_hat,
        denom=denom,
        ols=ols,
        tsls=tsls,
        projection=p,
    )


def closed_form_alpha(m_tsls: np.ndarray, cse: np.ndarray, m_ols: np.ndarray) -> float:
    """Optimal efficient-side weight given population MSE and cross matrices.

    For the quadratic trace objective

        f(w) = tr(w^2 * m_ols + 2 w (1 - w) * cse + (1 - w)^2 * m_tsls),

    the minimizing weight on the efficient estimator is

        w = tr(m_tsls - cse) / tr(m_tsls - 2 cse + m_ols).

    This is a population-level quantity used to validate the empirical
    shrinkage ratio, not part of the data path.

    Raises
    ------
    DegenerateCombinationError
        When the denominator trace vanishes, which happens exactly when
        the two estimators have equal trace root-MSE.
    """
    m_tsls = np.asarray(m_tsls, dtype=float)
    cse = np.asarray(cse, dtype=float)
    m_ols = np.asarray(m_ols, dtype=float)
    for name, mat in (("m_tsls", m_tsls), ("cse", cse), ("m_ols", m_ols)):
        if mat.shape != m_tsls.shape or mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise DataError(f"{name} must be square and share one dimension")
    num = float(np.trace(m_tsls) - np.trace(cse))
    den = float(np.trace(m_tsls) - 2.0 * np.trace(cse) + np.trace(m_ols))
    scale = abs(np.trace(m_tsls)) + abs(np.trace(m_ols)) + abs(np.trace(cse))
    if abs(den) <= 1e-14 * (1.0 + scale):
        raise DegenerateCombinationError(
            "equal trace root-MSE: the optimal weight is not unique",
            tau_hat=num,
            denom=den,
        )
    return num / den
