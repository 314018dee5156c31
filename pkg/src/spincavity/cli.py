"""Command-line interface.

Subcommands: params | simulate | sweep | qfunction | validate.
Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 validation failure.  ``--threads`` (or the SPINCAVITY_THREADS environment
variable) sets the worker count for trajectory ensembles and deterministic
sweep points.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import output, runner, validate
from ._version import __version__
from .config import FORMATS, build_run_config, load_config
from .errors import CapacityError, ConfigError, IntegrationError, ValidationFailure


def _add_common(parser, needs_config=True):
    if needs_config:
        parser.add_argument("--config", required=True, help="TOML run configuration")
    parser.add_argument("--seed", type=int, default=None, help="master seed override")
    parser.add_argument(
        "--threads", type=int, default=None, help="worker count override"
    )
    parser.add_argument("--out", default=None, help="output directory override")
    parser.add_argument(
        "--format",
        action="append",
        choices=FORMATS,
        default=None,
        help="output format (repeatable); default: table and record",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spincavity",
        description=(
            "Cavity-engineered spin-1 dynamics: parameter mapping, open-system "
            "evolution, spin-nematic squeezing, and Q-function exports."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (
        ("params", "map laboratory parameters to the effective models"),
        ("simulate", "evolve the configured model and write squeezing time series"),
        ("sweep", "run an atom-number, damping-ratio, or angle-time sweep"),
        ("qfunction", "export Q-function sphere grids at snapshot times"),
    ):
        p = sub.add_parser(name, help=text)
        _add_common(p)

    v = sub.add_parser("validate", help="run the built-in acceptance checks at desk scale")
    v.add_argument("--threads", type=int, default=None)
    v.add_argument(
        "--dissipator-scale",
        type=float,
        default=1.0,
        help=argparse.SUPPRESS,  # fault-injection hook for tests
    )
    return parser


def _load(args) -> "runner.RunConfig":
    raw = load_config(args.config)
    return build_run_config(
        raw,
        seed_override=args.seed,
        workers_override=args.threads,
        out_override=args.out,
        formats_override=tuple(args.format) if args.format else None,
    )


def _meta(cfg) -> dict:
    return {"config": cfg.resolved}


def cmd_params(args) -> int:
    cfg = _load(args)
    report = runner.run_params(cfg)
    two_pi = 2.0 * np.pi
    print("effective Dicke parameters (/2pi, Hz):")
    for key, value in report["effective_dicke"].items():
        if key == "n_atoms":
            print(f"  {key:<12} {value}")
        else:
            print(f"  {key:<12} {value / two_pi:.6e}")
    print("dispersive parameters:")
    disp = report["dispersive"]
    print(f"  Lambda/2pi       {disp['Lambda'] / two_pi:.6e} Hz")
    print(f"  Gamma/2pi        {disp['Gamma'] / two_pi:.6e} Hz")
    print(f"  Gamma/Lambda     {disp['Gamma_over_Lambda']:.6e}")
    print(f"  omega_0'/2pi     {disp['omega_0_prime'] / two_pi:.6e} Hz")
    feas = report["feasibility"]
    print("feasibility:")
    print(f"  cooperativity C            {feas['cooperativity']:.4f}")
    print(f"  Gamma_sp/(Lambda/2)        {feas['gamma_sp_over_half_lambda']:.4e}")
    print(f"  large-detuning regime ok   {feas['large_detuning_ok']}")
    print(f"  dispersive regime ok       {feas['dispersive_ok']}")
    if "record" in cfg.formats:
        output.write_record(
            os.path.join(cfg.out_dir, "params.json"), {**_meta(cfg), "report": report}
        )
    return 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    sim = runner.run_simulate(cfg)
    best = min(
        (r for r in sim.records if r.defined), key=lambda r: r.xi2_min, default=None
    )
    print(f"mode: {sim.mode}; samples: {sim.sample_times.size}")
    if best is not None:
        print(
            f"peak squeezing xi2 = {best.xi2_min:.4f} ({best.xi2_min_db:.2f} dB) "
            f"at Lambda t = {best.lambda_t:.3f}, theta = {best.theta_opt_deg:.2f} deg"
        )
    if "table" in cfg.formats:
        output.write_table(
            os.path.join(cfg.out_dir, "timeseries.tsv"),
            output.records_columns(sim.records),
            {**_meta(cfg), "mode": sim.mode, "model": sim.summary},
        )
    if "record" in cfg.formats:
        record = {
            **_meta(cfg),
            "mode": sim.mode,
            "model": sim.summary,
            "peak": None
            if best is None
            else {
                "xi2_min": best.xi2_min,
                "xi2_min_db": best.xi2_min_db,
                "lambda_t": best.lambda_t,
                "theta_opt_deg": best.theta_opt_deg,
            },
        }
        output.write_record(os.path.join(cfg.out_dir, "summary.json"), record)
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    if cfg.sweep is None:
        raise ConfigError("sweep section is required for the sweep command")
    if cfg.sweep.axis == "atoms":
        result = runner.run_atoms_sweep(cfg)
        fit = result.fit
        print(
            f"scaling exponent {fit.exponent:.4f} "
            f"(95% CI [{fit.ci95[0]:.4f}, {fit.ci95[1]:.4f}])"
        )
        if "table" in cfg.formats:
            output.write_table(
                os.path.join(cfg.out_dir, "scaling.tsv"),
                {
                    "atoms": result.atoms,
                    "peak_xi2": result.peak_xi2,
                    "peak_lambda_t": result.peak_lambda_t,
                    "peak_theta_deg": result.peak_theta_deg,
                },
                {**_meta(cfg), "exponent": fit.exponent},
            )
        if "record" in cfg.formats:
            output.write_record(
                os.path.join(cfg.out_dir, "scaling.json"),
                {
                    **_meta(cfg),
                    "atoms": result.atoms,
                    "peak_xi2": result.peak_xi2,
                    "fit": {
                        "exponent": fit.exponent,
                        "stderr": fit.exponent_stderr,
                        "ci95": list(fit.ci95),
                        "r_squared": fit.r_squared,
                    },
                },
            )
        return 0
    if cfg.sweep.axis == "theta_time":
        hm = runner.run_theta_time_sweep(cfg)
        grids = {"oracle_xi2": hm.oracle_xi2}
        if hm.engine_xi2 is not None:
            grids["engine_xi2"] = hm.engine_xi2
        print(
            f"heatmap {hm.theta_deg.size} x {hm.lambda_t.size} at "
            f"Gamma/Lambda = {hm.gamma_over_lambda:.4f}"
        )
        if "table" in cfg.formats:
            output.write_table(
                os.path.join(cfg.out_dir, "heatmap.tsv"),
                output.heatmap_columns(hm.lambda_t, hm.theta_deg, grids),
                {**_meta(cfg), "gamma_over_lambda": hm.gamma_over_lambda},
            )
        if "record" in cfg.formats:
            output.write_record(
                os.path.join(cfg.out_dir, "heatmap.json"),
                {
                    **_meta(cfg),
                    "gamma_over_lambda": hm.gamma_over_lambda,
                    "lambda_t": hm.lambda_t,
                    "theta_deg": hm.theta_deg,
                    **{k: v for k, v in grids.items()},
                },
            )
        if "image" in cfg.formats:
            with np.errstate(divide="ignore"):
                for name, grid in grids.items():
                    output.save_heatmap_image(
                        os.path.join(cfg.out_dir, f"heatmap_{name}.svg"),
                        hm.lambda_t,
                        hm.theta_deg,
                        10.0 * np.log10(grid),
                        title=name.replace("_", " "),
                    )
        return 0
    panels = runner.run_gamma_sweep(cfg)
    for panel in panels:
        tag = f"{panel.gamma_over_lambda:g}"
        print(f"oracle panel Gamma/Lambda = {tag}")
        if "table" in cfg.formats:
            output.write_table(
                os.path.join(cfg.out_dir, f"oracle_panel_{tag}.tsv"),
                output.heatmap_columns(
                    panel.lambda_t, panel.theta_deg, {"oracle_xi2": panel.oracle_xi2}
                ),
                {**_meta(cfg), "gamma_over_lambda": panel.gamma_over_lambda},
            )
        if "image" in cfg.formats:
            with np.errstate(divide="ignore"):
                output.save_heatmap_image(
                    os.path.join(cfg.out_dir, f"oracle_panel_{tag}.svg"),
                    panel.lambda_t,
                    panel.theta_deg,
                    10.0 * np.log10(panel.oracle_xi2),
                    title=f"Gamma/Lambda = {tag}",
                )
    return 0


def cmd_qfunction(args) -> int:
    cfg = _load(args)
    snapshots = runner.run_qfunction(cfg)
    summary = []
    for snap in snapshots:
        tag = f"{snap.lambda_t:g}".replace(".", "p")
        print(
            f"Lambda t = {snap.lambda_t:g}: projected weight "
            f"{snap.grid.projected_weight:.6f}, principal axis "
            f"{snap.principal_axis_deg:.2f} deg"
        )
        if "table" in cfg.formats:
            output.write_table(
                os.path.join(cfg.out_dir, f"qfunction_lt{tag}.tsv"),
                output.sphere_grid_columns(snap.grid),
                {
                    **_meta(cfg),
                    "lambda_t": snap.lambda_t,
                    "projected_weight": snap.grid.projected_weight,
                },
            )
        if "image" in cfg.formats:
            render = (
                output.save_pole_view
                if cfg.qfunction is None or cfg.qfunction.projection == "pole"
                else output.save_mollweide
            )
            render(
                os.path.join(cfg.out_dir, f"qfunction_lt{tag}.svg"),
                snap.grid,
                title=f"Lambda t = {snap.lambda_t:g}",
            )
        summary.append(
            {
                "lambda_t": snap.lambda_t,
                "projected_weight": snap.grid.projected_weight,
                "principal_axis_deg": snap.principal_axis_deg,
            }
        )
    if "record" in cfg.formats:
        output.write_record(
            os.path.join(cfg.out_dir, "qfunction.json"),
            {**_meta(cfg), "snapshots": summary},
        )
    return 0


def cmd_validate(args) -> int:
    workers = args.threads if args.threads is not None else 1
    results = validate.run_checks(
        dissipator_scale=args.dissipator_scale, workers=workers
    )
    failed = [r for r in results if not r.passed]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<28} ({r.seconds:6.2f} s)  {r.detail}")
    if failed:
        raise ValidationFailure(f"{len(failed)} of {len(results)} checks failed")
    print(f"all {len(results)} checks passed")
    return 0


_COMMANDS = {
    "params": cmd_params,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "qfunction": cmd_qfunction,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(json.dumps({"error": "config", "detail": str(exc)}), file=sys.stderr)
        return 1
    except (CapacityError, IntegrationError) as exc:
        print(json.dumps({"error": "numerical", "detail": str(exc)}), file=sys.stderr)
        return 2
    except ValidationFailure as exc:
        print(json.dumps({"error": "validation", "detail": str(exc)}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
