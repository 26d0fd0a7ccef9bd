"""Command-line front end: simulate, level, power, verify, and synth.

Exit codes: 0 on success, 2 on configuration/validation errors, 3 on numeric
failures during a run. Worker parallelism for replication studies comes from
--jobs (or the FAIRBOT_JOBS environment variable).
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys

import numpy as np

from . import reporting, scenarios, verifydata
from .bot import GaussianLaw
from .errors import ConvergenceFailure, FairbotError, NotPositiveDefinite
from .scenarios import SCENARIO_NAMES, named_config

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

_RUN_ERRORS = (NotPositiveDefinite, ConvergenceFailure, np.linalg.LinAlgError, FloatingPointError)


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("FAIRBOT_JOBS", "1")))
    except ValueError:
        return 1


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated floats, got {text!r}")


def _holdout(text: str):
    if text == "random":
        return text
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a member index or 'random', got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fairbot",
        description="Calibration assessment for multivariate Gaussian ensemble forecasts.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sim = sub.add_parser("simulate", help="run one miscalibration experiment")
    sim.add_argument("--scenario", required=True, choices=sorted(SCENARIO_NAMES))
    sim.add_argument("--p", type=int, required=True, help="forecast dimension")
    sim.add_argument("--n", type=int, required=True, help="ensemble size")
    sim.add_argument("--cases", type=int, default=10000)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--bins", type=int, default=20)
    sim.add_argument("--out", required=True, help="report JSON path")
    sim.add_argument("--emit-values", action="store_true", help="include raw BOT values")
    sim.add_argument("--hist-csv", help="also write the histogram table to this CSV")
    sim.add_argument("--plot", help="also render the histogram panel to this file")

    lev = sub.add_parser("level", help="rejection rates for calibrated forecasts")
    lev.add_argument("--p-list", type=_int_list, required=True)
    lev.add_argument("--n-list", type=_int_list, required=True)
    lev.add_argument("--reps", type=int, default=200)
    lev.add_argument("--cases", type=int, default=2000)
    lev.add_argument("--level", type=float, default=0.05)
    lev.add_argument("--seed", type=int, default=0)
    lev.add_argument("--bins", type=int, default=20)
    lev.add_argument("--jobs", type=int, default=_default_jobs())
    lev.add_argument("--out", required=True, help="rate table CSV path")
    lev.add_argument("--plot", help="also render rate curves to this file")

    pow_ = sub.add_parser("power", help="power curves along a forecast-parameter grid")
    pow_.add_argument("--sweep", required=True, choices=scenarios.SWEEPABLE)
    pow_.add_argument("--grid", type=_float_list, help="comma-separated sweep values")
    pow_.add_argument("--p", type=int, required=True)
    pow_.add_argument("--n", type=int, required=True)
    pow_.add_argument("--reps", type=int, default=200)
    pow_.add_argument("--cases", type=int, default=2000)
    pow_.add_argument("--level", type=float, default=0.05)
    pow_.add_argument("--seed", type=int, default=0)
    pow_.add_argument("--bins", type=int, default=20)
    pow_.add_argument("--jobs", type=int, default=_default_jobs())
    pow_.add_argument("--out", required=True, help="power table CSV path")
    pow_.add_argument("--plot", help="also render power curves to this file")

    ver = sub.add_parser("verify", help="evaluate the sample transforms on a dataset")
    ver.add_argument("--input", required=True)
    ver.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    ver.add_argument(
        "--mode",
        choices=("perfect-reliability", "against-observation"),
        default="perfect-reliability",
    )
    ver.add_argument("--n-sub", type=int, required=True, help="members per evaluated ensemble")
    ver.add_argument("--holdout", type=_holdout, default=0)
    ver.add_argument("--selection", choices=("first-n", "random"), default="first-n")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--bins", type=int, default=20)
    ver.add_argument("--out", required=True, help="report JSON path")
    ver.add_argument("--emit-values", action="store_true")
    ver.add_argument("--bias-csv", help="bias diagnostics CSV (default <out>.bias.csv)")
    ver.add_argument("--hist-csv", help="also write the histogram table to this CSV")
    ver.add_argument("--plot", help="also render the histogram panel to this file")

    syn = sub.add_parser("synth", help="generate a synthetic Gaussian dataset")
    syn.add_argument("--p", type=int, required=True)
    syn.add_argument("--members", type=int, required=True)
    syn.add_argument("--cases", type=int, required=True)
    syn.add_argument("--cov", choices=("identity", "ar1", "alt"), default="ar1")
    syn.add_argument("--sigma-sq", type=float, default=1.0)
    syn.add_argument("--rho", type=float, default=0.6)
    syn.add_argument("--sigma-delta-sq", type=float, default=0.0)
    syn.add_argument("--rho-delta", type=float, default=0.0)
    syn.add_argument(
        "--bias",
        type=_float_list,
        help="mean shift of the member law (one value broadcasts to all dimensions)",
    )
    syn.add_argument("--seed", type=int, default=0)
    syn.add_argument("--out", required=True, help="dataset JSONL path")

    return parser


def cmd_simulate(args) -> int:
    config = named_config(args.scenario, args.p, args.n)
    if args.n <= args.p:
        raise FairbotError(f"fair transform needs n > p, got n={args.n}, p={args.p}")
    if args.bins < 1 or args.cases < 1:
        raise FairbotError("--bins and --cases must be positive")
    scenarios.build_pair(config)  # surface covariance problems as config errors

    def run():
        report = scenarios.run_experiment(config, args.cases, args.seed, args.bins)
        manifest = reporting.RunManifest.create("simulate", vars(args), args.seed)
        reporting.write_report_json(args.out, report, manifest, args.emit_values)
        if args.hist_csv:
            reporting.write_histogram_csv(args.hist_csv, report, manifest)
        if args.plot:
            from . import plots

            plots.save_histogram_panel(
                report, args.plot, title=f"{args.scenario} (p={args.p}, n={args.n})"
            )
        summary = ", ".join(
            f"{v}: D={s.d_stat:.4f} p={s.p_value:.4g}" for v, s in report.series.items()
        )
        print(f"wrote {args.out} [{summary}]")
        return 0

    return _run_stage(run)


def cmd_level(args) -> int:
    if not args.p_list or not args.n_list:
        raise FairbotError("--p-list and --n-list must be nonempty")
    combos = [(p, n) for p in args.p_list for n in args.n_list]
    configs = []
    for p, n in combos:
        if n <= p:
            raise FairbotError(f"fair transform needs n > p, got n={n}, p={p}")
        configs.append(named_config("calibrated", p, n))

    def run():
        rows = []
        for idx, ((p, n), config) in enumerate(zip(combos, configs)):
            rates = scenarios.rejection_rate(
                config,
                args.cases,
                args.reps,
                args.level,
                args.seed,
                args.bins,
                args.jobs,
                base_stream=idx * args.reps * scenarios.STREAM_SPACING,
            )
            for variant, rate in rates.items():
                rows.append([p, n, variant, rate])
        manifest = reporting.RunManifest.create("level", vars(args), args.seed)
        reporting.write_rate_csv(
            args.out, ["p", "n", "variant", "rejection_rate"], rows, manifest
        )
        if args.plot:
            from . import plots

            plots.save_level_curves([tuple(r) for r in rows], args.plot, args.level)
        print(f"wrote {args.out} ({len(rows)} rows)")
        return 0

    return _run_stage(run)


def cmd_power(args) -> int:
    default_grids = {
        "sigma_f_sq": np.linspace(0.85, 1.2, 8),
        "rho_f": np.linspace(0.4, 0.75, 8),
    }
    grid = args.grid if args.grid else [float(v) for v in default_grids[args.sweep]]
    kind = scenarios.Kind.TYPE1 if args.sweep == "sigma_f_sq" else scenarios.Kind.TYPE2
    base = scenarios.ScenarioConfig(p=args.p, n=args.n, kind=kind)
    if args.n <= args.p:
        raise FairbotError(f"fair transform needs n > p, got n={args.n}, p={args.p}")
    for value in grid:  # validate the whole grid before starting a long run
        dataclasses.replace(base, **{args.sweep: float(value)})

    def run():
        points = scenarios.power_curve(
            base, args.sweep, grid, args.cases, args.reps, args.level,
            args.seed, args.bins, args.jobs,
        )
        rows = []
        for point in points:
            for variant, rate in point.rates.items():
                rows.append([point.value, variant, rate])
        manifest = reporting.RunManifest.create("power", vars(args), args.seed)
        reporting.write_rate_csv(
            args.out, ["sweep_value", "variant", "rejection_rate"], rows, manifest
        )
        if args.plot:
            from . import plots

            plots.save_power_curves(points, args.plot, args.sweep, args.level)
        print(f"wrote {args.out} ({len(points)} grid points)")
        return 0

    return _run_stage(run)


def cmd_verify(args) -> int:
    dataset = verifydata.load_dataset(args.input, args.format)
    plan = verifydata.VerifyPlan(
        mode=args.mode.replace("-", "_"),
        n_sub=args.n_sub,
        member_selection=args.selection.replace("-", "_"),
        holdout=args.holdout,
        seed=args.seed,
    )
    # Surface plan/dataset inconsistencies (n_sub too large, missing obs)
    # before the run stage so they exit with the configuration code.
    verifydata.validate_plan(dataset, plan)

    def run():
        report = verifydata.run_verification(dataset, plan, args.bins)
        manifest = reporting.RunManifest.create("verify", vars(args), args.seed)
        reporting.write_report_json(args.out, report, manifest, args.emit_values)
        if args.hist_csv:
            reporting.write_histogram_csv(args.hist_csv, report, manifest)
        if dataset.obs is not None:
            bias_path = args.bias_csv or f"{args.out}.bias.csv"
            reporting.write_bias_csv(bias_path, verifydata.bias_diagnostics(dataset), manifest)
        if args.plot:
            from . import plots

            plots.save_histogram_panel(report, args.plot, title=f"{args.mode} (n_sub={args.n_sub})")
        summary = ", ".join(
            f"{v}: D={s.d_stat:.4f} p={s.p_value:.4g}" for v, s in report.series.items()
        )
        print(f"wrote {args.out} [{summary}]")
        return 0

    return _run_stage(run)


def cmd_synth(args) -> int:
    if args.members < 2:
        raise FairbotError(f"--members must be >= 2, got {args.members}")
    if args.cases < 1:
        raise FairbotError(f"--cases must be >= 1, got {args.cases}")
    if args.cov == "identity":
        cov = np.eye(args.p) * args.sigma_sq
    elif args.cov == "ar1":
        cov = scenarios.ar1_covariance(args.p, args.sigma_sq, args.rho)
    else:
        cov = scenarios.alternating_covariance(
            args.p, args.sigma_sq, args.rho, args.sigma_delta_sq, args.rho_delta
        )
    law = GaussianLaw(np.zeros(args.p), cov)
    shift = None
    if args.bias:
        if len(args.bias) not in (1, args.p):
            raise FairbotError(
                f"--bias needs 1 or {args.p} values, got {len(args.bias)}"
            )
        shift = args.bias[0] if len(args.bias) == 1 else np.asarray(args.bias)

    def run():
        dataset = verifydata.synth_dataset(law, args.cases, args.members, args.seed, shift)
        manifest = reporting.RunManifest.create("synth", vars(args), args.seed)
        verifydata.write_jsonl(dataset, args.out, reporting._plain(manifest))
        print(f"wrote {args.out} ({dataset.n_cases} cases, M={dataset.n_members}, p={dataset.dim})")
        return 0

    return _run_stage(run)


def _run_stage(run) -> int:
    try:
        return run()
    except _RUN_ERRORS as exc:
        print(f"fairbot: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


_COMMANDS = {
    "simulate": cmd_simulate,
    "level": cmd_level,
    "power": cmd_power,
    "verify": cmd_verify,
    "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.subcommand](args)
    except (FairbotError, ValueError) as exc:
        print(f"fairbot: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
