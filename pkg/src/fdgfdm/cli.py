"""Command-line entry point.

Subcommands:
  analyze    closed-form powers and SIR at a single operating point
  simulate   Monte-Carlo powers and SIR at a single operating point
  optimize   solve the SIR-optimal receiver filter and export it
  sweep      run a scenario file and emit CSV or plot data
  calibrate  compare the analytic model against the shipped reference curves

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import scenarios as sc
from .analytics import ClosedFormAnalytics
from .linksim import monte_carlo_powers
from .optimizer import NumericalError, optimal_receiver, sir_of_filter
from .util import to_db

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_point_config(path):
    """Point-config schema: {"base": {...}, "receiver": "zf", "mode": "c_dlc"}."""
    if path is None:
        raw = {}
    else:
        with open(path) as fh:
            raw = json.load(fh)
    if not isinstance(raw, dict):
        raise sc.ScenarioError("point config must be a JSON object")
    for key in raw:
        if key not in {"base", "receiver", "mode"}:
            raise sc.ScenarioError(f"unknown point-config field {key!r}")
    base = sc._merge(sc.DEFAULT_BASE, raw.get("base", {}), "base")
    receiver = raw.get("receiver", "zf")
    if receiver not in sc.RECEIVERS:
        raise sc.ScenarioError(f"unknown receiver {receiver!r}")
    mode = raw.get("mode", "c_dlc")
    if mode not in sc.MODES:
        raise sc.ScenarioError(f"unknown cancellation mode {mode!r}")
    return base, receiver, mode


def _cmd_analyze(args) -> int:
    base, receiver, _ = _load_point_config(args.config)
    taps = None
    if receiver == "optimal":
        taps = sc.optimize_receiver(base).filter.taps
    link = sc.build_link(base, receiver, filter_taps=taps)
    engine = ClosedFormAnalytics(link.analytics())
    br = engine.breakdown()
    report = {
        "receiver": receiver,
        "desired_power_db": to_db(br.sigma_desired.mean()),
        "interference_power_db": to_db(br.sigma_interf_total.mean()),
    }
    for mode in sc.MODES:
        report[f"residual_si_db_{mode}"] = to_db(br.mean_residual_si(mode))
        report[f"sir_db_{mode}"] = to_db(br.gamma_aggregate(mode))
    _emit_report(report, args.out)
    return EXIT_OK


def _cmd_simulate(args) -> int:
    base, receiver, _ = _load_point_config(args.config)
    taps = None
    if receiver == "optimal":
        taps = sc.optimize_receiver(base).filter.taps
    link = sc.build_link(base, receiver, filter_taps=taps)
    rng = np.random.default_rng(args.seed)
    est = monte_carlo_powers(link, args.trials, rng)
    report = {
        "receiver": receiver,
        "trials": est.trials,
        "seed": args.seed,
        "sir_db": est.sir_db(),
        "sir_std_error_db": est.sir_stderr_db(),
    }
    for mode in sc.MODES:
        report[f"residual_si_db_{mode}"] = est.residual_si_db(mode)
        report[f"residual_si_std_error_db_{mode}"] = est.residual_si_stderr_db(mode)
    for key in ("desired", "interf"):
        report[f"{key}_power_db"] = to_db(est.grid_mean[key])
    _emit_report(report, args.out)
    return EXIT_OK


def _cmd_optimize(args) -> int:
    base, _, _ = _load_point_config(args.config)
    solution = sc.optimize_receiver(base)
    report = {
        "achieved_sir_db": solution.achieved_sir_db,
        "eigen_residual": solution.eigen_residual,
        "regularization": solution.regularization,
        "degenerate_top_eigenvalue": solution.degenerate,
    }
    if args.out:
        sc.save_filter_file(solution.filter, args.out)
        report["filter_file"] = args.out
    _emit_report(report, None)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    scenario = sc.load_scenario(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.engine is not None:
        overrides["engines"] = {"analytic": ("analytic",), "mc": ("mc",),
                                "both": ("analytic", "mc")}[args.engine]
    if overrides:
        raw = sc.scenario_to_dict(scenario)
        raw.update({k: list(v) if isinstance(v, tuple) else v
                    for k, v in overrides.items()})
        scenario = sc.load_scenario(raw)

    def progress(row):
        if not args.quiet:
            print(f"  {row.sweep_param}={row.sweep_value:g} {row.receiver}/"
                  f"{row.mode}/{row.engine}: {row.value_db:.3f} dB",
                  file=sys.stderr)

    rows = sc.run_scenario(scenario, progress=progress)
    if args.format == "csv":
        sc.emit_csv(rows, args.out)
        print(f"wrote {len(rows)} rows to {args.out}")
    else:
        written = sc.emit_plotdata(rows, args.out)
        print(f"wrote {len(written)} series files to {args.out}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    anchors = sc.load_anchors(args.anchors)

    def progress(key, value):
        if not args.quiet:
            print(f"  {key[0]}/{key[1]} @ {key[2]:g}: {value:.3f} dB",
                  file=sys.stderr)

    report = sc.calibrate(anchors, progress=progress)
    text = report.to_text()
    print(text)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    return EXIT_OK


def _emit_report(report: dict, out_path) -> None:
    text = json.dumps(report, indent=2, sort_keys=True)
    print(text)
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdgfdm",
        description="Full-duplex GFDM link laboratory")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="closed-form powers at one point")
    p.add_argument("--config", help="point-config JSON path")
    p.add_argument("--out", help="write the JSON report here as well")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("simulate", help="Monte-Carlo powers at one point")
    p.add_argument("--config", help="point-config JSON path")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the JSON report here as well")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("optimize", help="solve the SIR-optimal receiver filter")
    p.add_argument("--config", help="point-config JSON path")
    p.add_argument("--out", help="filter file destination (JSON)")
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("sweep", help="run a scenario file")
    p.add_argument("--config", required=True, help="scenario JSON path")
    p.add_argument("--out", required=True, help="CSV path or plot-data directory")
    p.add_argument("--format", choices=("csv", "plotdata"), default="csv")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--engine", choices=("analytic", "mc", "both"))
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("calibrate", help="compare against reference curves")
    p.add_argument("--anchors", help="alternate anchors JSON path")
    p.add_argument("--out", help="write the text report here as well")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=_cmd_calibrate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (sc.ScenarioError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
