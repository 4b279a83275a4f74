"""CSV ingestion, run configuration, result tables, and serialization.

Ingestion is complete-case: any row with a missing or non-numeric cell in
a used column is dropped and counted.  The treatment column must be coded
0/1; anything else is a validation error rather than missingness.  All
numeric JSON output carries full round-trip precision, while the
human-readable table displays two decimals.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .bootstrap import BootstrapConfig, BootstrapSummary, bootstrap_se
from .diagnostics import FTestResult, first_stage_f
from .effects import natural_effects, total_effect_fit
from .estimators import (
    HAUSMAN,
    BootstrapCse,
    SelectionProjection,
    ols_fit,
    spsl_fit,
    tsls_fit,
)
from .exceptions import ConfigError, DataError
from .model import TrialDataset, build_designs
from .simulate import DEFAULT_ETAS, DEFAULT_KAPPAS, DEFAULT_NS, GridSummary

__all__ = [
    "RunConfig",
    "LoadReport",
    "LoadResult",
    "ReportTable",
    "load_csv",
    "write_dataset_csv",
    "run_fit",
    "run_diagnose",
    "grid_to_rows",
    "write_grid_csv",
    "write_replicates_csv",
    "grid_to_json_payload",
    "json_dumps",
]

DISPLAY_DECIMALS = 2


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration for one analysis or simulation run.

    Column roles must name distinct existing CSV columns; there is exactly
    one outcome, treatment, and mediator.  The projection defaults to the
    treatment coefficient alone.
    """

    input: str | None = None
    outcome: str = "y"
    treatment: str = "r"
    mediator: str = "m"
    covariates: tuple[str, ...] = ()
    instruments: tuple[str, ...] = ()
    estimators: tuple[str, ...] = ("ols", "tsls", "spsl")
    projection: tuple[str, ...] | None = None
    cse_mode: str = "hausman"
    cse_bootstrap_b: int = 200
    bootstrap_b: int = 1000
    seed: int = 0
    tsls_cov: str = "projected"
    clip_shrinkage: bool = True
    freeze_alpha: bool = False
    output_format: str = "json"
    etas: tuple[float, ...] = DEFAULT_ETAS
    kappas: tuple[float, ...] = DEFAULT_KAPPAS
    ns: tuple[int, ...] = DEFAULT_NS
    replications: int = 2000

    def __post_init__(self):
        roles = {
            "outcome": self.outcome,
            "treatment": self.treatment,
            "mediator": self.mediator,
        }
        for role, name in roles.items():
            if not name:
                raise ConfigError(f"missing {role} column name")
        named = list(roles.values()) + list(self.covariates) + list(self.instruments)
        if len(set(named)) != len(named):
            raise ConfigError(f"column roles overlap: {sorted(named)}")
        if "const" in named:
            raise ConfigError("'const' is reserved for the prepended intercept")
        for est in self.estimators:
            if est not in ("ols", "tsls", "spsl"):
                raise ConfigError(f"unknown estimator {est!r}")
        if self.cse_mode not in ("hausman", "bootstrap"):
            raise ConfigError(f"unknown cse_mode {self.cse_mode!r}")
        if self.tsls_cov not in ("projected", "unprojected"):
            raise ConfigError(f"unknown tsls_cov {self.tsls_cov!r}")
        if self.output_format not in ("json", "csv"):
            raise ConfigError(f"unknown output format {self.output_format!r}")
        if self.bootstrap_b < 1:
            raise ConfigError("bootstrap_b must be >= 1")

    def resolved_cse_mode(self):
        if self.cse_mode == "hausman":
            return HAUSMAN
        return BootstrapCse(b=self.cse_bootstrap_b, seed=self.seed)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class LoadReport:
    n_raw: int
    n_used: int
    n_dropped: int
    columns: tuple[str, ...]


@dataclass(frozen=True)
class LoadResult:
    data: TrialDataset
    extra_instruments: np.ndarray | None
    report: LoadReport


def _parse_cell(text: str) -> float | None:
    text = text.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_csv(path, config: RunConfig) -> LoadResult:
    """Read a trial CSV with complete-case filtering.

    Rows with any empty or non-numeric cell in a used column are dropped
    (the count is reported).  The treatment column is validated to be 0/1
    and an intercept column is prepended to the covariates.

    Raises
    ------
    ConfigError
        If a named column is absent from the header.
    DataError
        If the treatment is not binary or no complete cases remain.
    """
    used = (
        [config.outcome, config.treatment, config.mediator]
        + list(config.covariates)
        + list(config.instruments)
    )
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing = [c for c in used if c not in header]
        if missing:
            raise ConfigError(f"missing column(s) in {path}: {missing}")
        n_raw = 0
        for record in reader:
            n_raw += 1
            parsed = [_parse_cell(record[c] if record[c] is not None else "") for c in used]
            if any(v is None for v in parsed):
                continue
            rows.append(parsed)
    if not rows:
        raise DataError(f"zero complete cases in {path}")
    table = np.asarray(rows, dtype=float)
    n_used = table.shape[0]

    y = table[:, 0]
    r = table[:, 1]
    m = table[:, 2]
    bad = np.unique(r[(r != 0.0) & (r != 1.0)])
    if bad.size:
        raise DataError(
            f"treatment not binary: column {config.treatment!r} contains {bad.tolist()[:5]}"
        )
    n_cov = len(config.covariates)
    x = np.column_stack([np.ones(n_used), table[:, 3 : 3 + n_cov]])
    extra = table[:, 3 + n_cov :] if config.instruments else None
    data = TrialDataset(
        y=y,
        r=r,
        m=m,
        x=x,
        x_names=("const",) + tuple(config.covariates),
        mediator_name=config.mediator,
        treatment_name=config.treatment,
    )
    report = LoadReport(
        n_raw=n_raw,
        n_used=n_used,
        n_dropped=n_raw - n_used,
        columns=tuple(used),
    )
    return LoadResult(data=data, extra_instruments=extra, report=report)


def write_dataset_csv(data: TrialDataset, path) -> None:
    """Serialize a dataset with full round-trip float precision."""
    names = [data.treatment_name, data.mediator_name, "y"] + list(data.x_names[1:])
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(names)
        for i in range(data.n):
            row = [data.r[i], data.m[i], data.y[i]] + list(data.x[i, 1:])
            writer.writerow([repr(float(v)) for v in row])


@dataclass(frozen=True)
class ReportTable:
    """Side-by-side estimates table in the three-estimator layout.

    coefficient_rows: (name, {estimator: (estimate, se)})
    effect_rows: (label, {estimator: (estimate, se)}) for NDE and NIE
    alpha_hat: shrinkage weight on the TSLS fit, or None without spsl.
    """

    coefficient_rows: tuple
    effect_rows: tuple
    alpha_hat: float | None
    estimators: tuple[str, ...]

    def render(self) -> str:
        width = 16
        label_w = max(
            [len(name) for name, _ in self.coefficient_rows]
            + [len(label) for label, _ in self.effect_rows]
            + [len("shrinkage alpha")]
        )
        head = " ".join(f"{est.upper():>{width}}" for est in self.estimators)
        lines = [f"{'':<{label_w}} {head}"]

        def fmt(cells):
            out = []
            for est in self.estimators:
                pair = cells.get(est)
                if pair is None:
                    out.append(f"{'--':>{width}}")
                else:
                    estv, se = pair
                    text = f"{estv:.{DISPLAY_DECIMALS}f}"
                    if se is not None:
                        text += f" ({se:.{DISPLAY_DECIMALS}f})"
                    out.append(f"{text:>{width}}")
            return " ".join(out)

        for name, cells in self.coefficient_rows:
            lines.append(f"{name:<{label_w}} {fmt(cells)}")
        for label, cells in self.effect_rows:
            lines.append(f"{label:<{label_w}} {fmt(cells)}")
        if self.alpha_hat is not None:
            alpha_cells = {"spsl": (self.alpha_hat, None)}
            lines.append(f"{'shrinkage alpha':<{label_w}} {fmt(alpha_cells)}")
        return "\n".join(lines)

    def check_affine(self) -> bool:
        """Display-consistency check: the spsl column equals the affine
        combination of the ols and tsls columns at the reported weight,
        within the rounding of the displayed precision."""
        if self.alpha_hat is None:
            return True
        a = self.alpha_hat
        step = 10.0 ** (-DISPLAY_DECIMALS)
        slack = 0.5 * step * (abs(a) + abs(1.0 - a) + 1.0) + 1e-12
        for _, cells in self.coefficient_rows:
            if not all(est in cells for est in ("ols", "tsls", "spsl")):
                return False
            combo = a * cells["tsls"][0] + (1.0 - a) * cells["ols"][0]
            if abs(cells["spsl"][0] - combo) > slack:
                return False
        return True


def _fit_all(data: TrialDataset, extra, config: RunConfig):
    bundle = build_designs(data, extra_instruments=extra)
    total = total_effect_fit(data)
    if config.projection is None:
        projection = SelectionProjection.treatment_only(bundle)
    else:
        try:
            projection = SelectionProjection(
                tuple(bundle.v_names.index(nm) for nm in config.projection)
            )
        except ValueError as err:
            raise ConfigError(f"projection names not in the design: {err}") from None
    fits = {}
    alpha_hat = None
    if "ols" in config.estimators or "spsl" in config.estimators:
        fits["ols"] = ols_fit(data.y, bundle.v, names=bundle.v_names)
    if "tsls" in config.estimators or "spsl" in config.estimators:
        fits["tsls"] = tsls_fit(data.y, bundle, cov_mode=config.tsls_cov)
    coef = {}
    if "ols" in config.estimators:
        coef["ols"] = fits["ols"].coef
    if "tsls" in config.estimators:
        coef["tsls"] = fits["tsls"].coef
    if "spsl" in config.estimators:
        combo = spsl_fit(
            data.y,
            bundle,
            p=projection,
            cse_mode=config.resolved_cse_mode(),
            clip_shrinkage=config.clip_shrinkage,
            cov_mode=config.tsls_cov,
            ols=fits["ols"],
            tsls=fits["tsls"],
        )
        coef["spsl"] = combo.coef
        alpha_hat = combo.alpha_hat
    effects = {
        est: natural_effects(total.theta_r, c.beta_r) for est, c in coef.items()
    }
    return bundle, projection, total, coef, effects, alpha_hat


def run_fit(data: TrialDataset, config: RunConfig, extra_instruments=None):
    """Full fit pipeline: estimates, bootstrap SEs, report table, JSON payload."""
    bundle, projection, total, coef, effects, alpha_hat = _fit_all(
        data, extra_instruments, config
    )
    boots: dict[str, BootstrapSummary] = {}
    for est in config.estimators:
        boots[est] = bootstrap_se(
            data,
            BootstrapConfig(
                b=config.bootstrap_b,
                seed=config.seed,
                estimator=est,
                projection=projection,
                cse_mode=config.resolved_cse_mode(),
                cov_mode=config.tsls_cov,
                clip_shrinkage=config.clip_shrinkage,
                freeze_alpha=config.freeze_alpha,
            ),
        )

    coefficient_rows = []
    for j, name in enumerate(bundle.v_names):
        cells = {
            est: (float(coef[est].values[j]), boots[est].se[name])
            for est in config.estimators
        }
        coefficient_rows.append((name, cells))
    effect_rows = []
    for label, key in (("NDE", "nde"), ("NIE", "nie")):
        cells = {
            est: (getattr(effects[est], key), boots[est].se[key])
            for est in config.estimators
        }
        effect_rows.append((label, cells))
    table = ReportTable(
        coefficient_rows=tuple(coefficient_rows),
        effect_rows=tuple(effect_rows),
        alpha_hat=alpha_hat,
        estimators=config.estimators,
    )

    coefficients = [
        {
            "estimator": est,
            "coefficient": name,
            "estimate": float(coef[est].values[j]),
            "se": boots[est].se[name],
        }
        for est in config.estimators
        for j, name in enumerate(bundle.v_names)
    ]
    effect_records = [
        {
            "estimator": est,
            "te": effects[est].te,
            "te_se": boots[est].se["te"],
            "nde": effects[est].nde,
            "nde_se": boots[est].se["nde"],
            "nie": effects[est].nie,
            "nie_se": boots[est].se["nie"],
        }
        for est in config.estimators
    ]
    payload = {
        "config": config.to_dict(),
        "seed": config.seed,
        "n": data.n,
        "coefficients": coefficients,
        "effects": effect_records,
        "alpha_hat": alpha_hat,
        "bootstrap_failed": {est: boots[est].n_failed for est in config.estimators},
    }
    return table, payload


def run_diagnose(data: TrialDataset, config: RunConfig, extra_instruments=None) -> tuple[FTestResult, dict]:
    """First-stage instrument-strength diagnostic and its JSON payload."""
    bundle = build_designs(data, extra_instruments=extra_instruments)
    result = first_stage_f(data, bundle)
    payload = {
        "config": config.to_dict(),
        "seed": config.seed,
        "f": result.f,
        "df1": result.df1,
        "df2": result.df2,
        "p": result.p,
        "weak": result.f < 10.0,
    }
    return result, payload


def grid_to_rows(summary: GridSummary) -> list[dict]:
    return [
        {
            "scenario": {"eta": c.eta, "kappa": c.kappa, "n": c.n},
            "estimator": c.estimator,
            "estimand": c.estimand,
            "mean": c.mean,
            "bias": c.bias,
            "rmse": c.rmse,
            "mc_se": c.mc_se,
            "n_reps": c.n_reps,
            "n_failed": c.n_failed,
        }
        for c in summary.cells
    ]


def grid_to_json_payload(summary: GridSummary, config: RunConfig) -> dict:
    return {
        "config": config.to_dict(),
        "seed": summary.seed,
        "replications": summary.replications,
        "cells": grid_to_rows(summary),
    }


def write_grid_csv(summary: GridSummary, path) -> None:
    fields = [
        "eta", "kappa", "n", "estimator", "estimand",
        "mean", "bias", "rmse", "mc_se", "n_reps", "n_failed",
    ]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(fields)
        for c in summary.cells:
            writer.writerow(
                [c.eta, c.kappa, c.n, c.estimator, c.estimand]
                + [repr(float(v)) for v in (c.mean, c.bias, c.rmse, c.mc_se)]
                + [c.n_reps, c.n_failed]
            )


def write_replicates_csv(summary: GridSummary, path) -> None:
    """Per-replicate estimate dump for histogram regeneration."""
    if summary.replicates is None:
        raise ConfigError("grid was run without keep_replicates")
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["eta", "kappa", "n", "estimator", "estimand", "replicate", "estimate"])
        for (eta, kappa, n, est, q), draws in summary.replicates.items():
            for i, v in enumerate(draws):
                writer.writerow([eta, kappa, n, est, q, i, repr(float(v))])


def json_dumps(payload: dict) -> str:
    """Deterministic JSON text: sorted keys, full float precision."""
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True)
