"""Command-line entry points: fit, simulate, diagnose.

Every run echoes its fully resolved configuration (defaults included) and
seed, so outputs are reproducible from the emitted JSON alone.  Errors
exit non-zero with a single machine-parsable line on stderr:

    error:<category>: <detail>

with category config (exit 2), data (exit 3) or numeric (exit 4).
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from .exceptions import (
    ConfigError,
    DataError,
    DegenerateCombinationError,
    IdentifiabilityError,
    InfeasibleScenarioError,
    MedshrinkError,
)
from .io import (
    RunConfig,
    grid_to_json_payload,
    json_dumps,
    load_csv,
    run_diagnose,
    run_fit,
    write_grid_csv,
    write_replicates_csv,
)
from .simulate import run_grid

FULL_SCALE_REPLICATIONS = 100_000


def _split(text: str, cast):
    return tuple(cast(part) for part in text.split(",") if part.strip())


def _add_data_args(parser):
    parser.add_argument("--input", help="CSV file with a header row")
    parser.add_argument("--outcome", help="outcome column")
    parser.add_argument("--treatment", help="0/1 treatment offer column")
    parser.add_argument("--mediator", help="mediator column")
    parser.add_argument("--covariates", help="comma-separated baseline covariate columns")
    parser.add_argument(
        "--instruments",
        help="comma-separated external instrument columns (the treatment-by-"
        "covariate interactions are always constructed)",
    )


def _add_common_args(parser):
    parser.add_argument("--config", help="JSON config file; flags override its entries")
    parser.add_argument("--seed", type=int, help="RNG seed (default 0)")
    parser.add_argument("--out", help="write the JSON (or CSV) result here instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="medshrink",
        description="Natural direct/indirect effect estimation with OLS, TSLS "
        "and their shrinkage combination",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit all estimators on a trial CSV")
    _add_common_args(fit)
    _add_data_args(fit)
    fit.add_argument("--bootstrap-b", type=int, help="bootstrap replicates (default 1000)")
    fit.add_argument("--cse-mode", choices=["hausman", "bootstrap"])
    fit.add_argument("--projection", help="comma-separated coefficient names driving shrinkage")
    fit.add_argument("--tsls-cov", choices=["projected", "unprojected"])
    fit.add_argument("--freeze-alpha", action="store_true", default=None,
                     help="do not re-estimate the shrinkage weight inside the bootstrap")
    fit.add_argument("--no-clip-shrinkage", action="store_true", default=None,
                     help="allow the combination weight outside [0, 1]")

    sim = sub.add_parser("simulate", help="run the Monte Carlo scenario grid")
    _add_common_args(sim)
    sim.add_argument("--etas", help="comma-separated confounding levels (default 0,0.25,0.5)")
    sim.add_argument("--kappas", help="comma-separated instrument strengths (default 0.01,0.25,0.5)")
    sim.add_argument("--ns", help="comma-separated sample sizes (default 100,300,500)")
    sim.add_argument("--replications", type=int, help="replicates per cell (default 2000)")
    sim.add_argument("--full-scale", action="store_true",
                     help=f"use {FULL_SCALE_REPLICATIONS} replicates per cell (slow)")
    sim.add_argument("--format", choices=["csv", "json"], help="output format (default json)")
    sim.add_argument("--dump-replicates", help="also write per-replicate estimates to this CSV")

    diag = sub.add_parser("diagnose", help="first-stage instrument strength F test")
    _add_common_args(diag)
    _add_data_args(diag)

    return parser


def _config_from(args) -> RunConfig:
    base = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as handle:
                base = json.load(handle)
        except OSError as err:
            raise ConfigError(f"cannot read config file: {err}") from err
        except json.JSONDecodeError as err:
            raise ConfigError(f"config file is not valid JSON: {err}") from err
        if not isinstance(base, dict):
            raise ConfigError("config file must hold a JSON object")

    def override(key, value, transform=None):
        if value is not None:
            base[key] = transform(value) if transform else value

    override("input", getattr(args, "input", None))
    override("outcome", getattr(args, "outcome", None))
    override("treatment", getattr(args, "treatment", None))
    override("mediator", getattr(args, "mediator", None))
    override("covariates", getattr(args, "covariates", None), lambda t: _split(t, str))
    override("instruments", getattr(args, "instruments", None), lambda t: _split(t, str))
    override("seed", getattr(args, "seed", None))
    override("bootstrap_b", getattr(args, "bootstrap_b", None))
    override("cse_mode", getattr(args, "cse_mode", None))
    override("projection", getattr(args, "projection", None), lambda t: _split(t, str))
    override("tsls_cov", getattr(args, "tsls_cov", None))
    if getattr(args, "freeze_alpha", None):
        base["freeze_alpha"] = True
    if getattr(args, "no_clip_shrinkage", None):
        base["clip_shrinkage"] = False
    override("etas", getattr(args, "etas", None), lambda t: _split(t, float))
    override("kappas", getattr(args, "kappas", None), lambda t: _split(t, float))
    override("ns", getattr(args, "ns", None), lambda t: _split(t, int))
    override("replications", getattr(args, "replications", None))
    override("output_format", getattr(args, "format", None))

    for key in ("covariates", "instruments", "projection", "etas", "kappas", "ns", "estimators"):
        if key in base and base[key] is not None:
            base[key] = tuple(base[key])
    try:
        return RunConfig(**base)
    except TypeError as err:
        raise ConfigError(f"bad config entry: {err}") from err


def _emit(text: str, out_path):
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text + "\n")
    else:
        print(text)


def _load(config: RunConfig):
    if not config.input:
        raise ConfigError("no input CSV given (use --input or the config file)")
    loaded = load_csv(config.input, config)
    print(
        f"loaded {loaded.report.n_used} complete cases "
        f"({loaded.report.n_dropped} dropped) from {config.input}",
        file=sys.stderr,
    )
    return loaded


def _cmd_fit(args) -> int:
    config = _config_from(args)
    loaded = _load(config)
    table, payload = run_fit(loaded.data, config, loaded.extra_instruments)
    payload["n_dropped"] = loaded.report.n_dropped
    print(table.render())
    if not table.check_affine():
        raise IdentifiabilityError("report table failed the affine display check")
    _emit(json_dumps(payload), args.out)
    return 0


def _cmd_simulate(args) -> int:
    config = _config_from(args)
    replications = config.replications
    if args.full_scale:
        replications = FULL_SCALE_REPLICATIONS
        warnings.warn(
            "full-scale run: this recomputes every grid cell with "
            f"{replications} replicates and can take hours",
            stacklevel=1,
        )
    keep = bool(args.dump_replicates)
    summary = run_grid(
        etas=config.etas,
        kappas=config.kappas,
        ns=config.ns,
        replications=replications,
        seed=config.seed,
        keep_replicates=keep,
    )
    if keep:
        write_replicates_csv(summary, args.dump_replicates)
    if config.output_format == "csv":
        if args.out:
            write_grid_csv(summary, args.out)
            print(f"wrote {len(summary.cells)} summary rows to {args.out}", file=sys.stderr)
        else:
            raise ConfigError("csv output needs --out")
        print(json_dumps({"config": config.to_dict(), "seed": config.seed}))
    else:
        _emit(json_dumps(grid_to_json_payload(summary, config)), args.out)
    return 0


def _cmd_diagnose(args) -> int:
    config = _config_from(args)
    loaded = _load(config)
    result, payload = run_diagnose(loaded.data, config, loaded.extra_instruments)
    print(
        f"first-stage F = {result.f:.2f} on ({result.df1}, {result.df2}) df, "
        f"p = {result.p:.4g}"
    )
    _emit(json_dumps(payload), args.out)
    return 0


_COMMANDS = {"fit": _cmd_fit, "simulate": _cmd_simulate, "diagnose": _cmd_diagnose}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"error:config: {err}", file=sys.stderr)
        return 2
    except (DataError, InfeasibleScenarioError) as err:
        print(f"error:data: {err}", file=sys.stderr)
        return 3
    except (IdentifiabilityError, DegenerateCombinationError, np.linalg.LinAlgError) as err:
        print(f"error:numeric: {err}", file=sys.stderr)
        return 4
    except MedshrinkError as err:  # pragma: no cover - safety net
        print(f"error:data: {err}", file=sys.stderr)
        return 3
    except OSError as err:
        print(f"error:data: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
