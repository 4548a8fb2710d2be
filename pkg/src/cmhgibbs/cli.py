"""Command line entry point: ``cmhgibbs <subcommand> [options]``.

Exit status is 0 on success, 2 for usage or configuration errors and 1 for
failures while running. ``CMH_LOG`` sets the log level (default WARNING).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from cmhgibbs import ergodicity, harness
from cmhgibbs.distributions import DomainError
from cmhgibbs.models import REData, simulate_re_data
from cmhgibbs.neighborhoods import ConfigurationError
from cmhgibbs.sampler import StuckProposalError

log = logging.getLogger("cmhgibbs")

EXIT_RUNTIME = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cmhgibbs", description="Gibbs and conditional Metropolis-Hastings experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run-experiment", help="run every experiment in a config file and write report.csv")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--seed", type=_u64, help="override the config's master seed")
    run.add_argument("--workers", type=_positive_int, default=1)
    run.add_argument("--out", type=Path, default=Path("."))
    run.add_argument("--only", nargs="+", metavar="ID", help="run only these experiment ids")

    bounds = sub.add_parser("bounds", help="print neighborhood-size thresholds for geometric ergodicity")
    bounds.add_argument("--model", required=True, choices=["normal-normal", "random-effects"])
    bounds.add_argument("--gamma", type=float, help="Gibbs drift rate (default 0.75 or 23/30)")
    bounds.add_argument("--K", type=_positive_int, default=3)
    bounds.add_argument("--m", type=_positive_int, default=10)
    bounds.add_argument("--a1", type=float, default=30.0)
    bounds.add_argument("--a2", type=float, default=30.0)

    trace = sub.add_parser("trace", help="write trace.csv for one coordinate of one long run")
    trace.add_argument("--config", required=True, type=Path)
    trace.add_argument("--id", help="experiment id (default: first in the file)")
    trace.add_argument("--run-length", type=_positive_int, default=1_000_000)
    trace.add_argument("--start", type=int, default=999_000)
    trace.add_argument("--end", type=int, help="end of the window, exclusive (default: run length)")
    trace.add_argument("--coordinate", type=int, default=0)
    trace.add_argument("--seed", type=_u64)
    trace.add_argument("--out", type=Path, default=Path("."))

    sim = sub.add_parser("simulate-data", help="simulate a random effects dataset")
    sim.add_argument("--K", type=_positive_int, default=3)
    sim.add_argument("--m", type=_positive_int, default=10)
    sim.add_argument("--a", type=float, default=2.0)
    sim.add_argument("--b", type=float, default=2.0)
    sim.add_argument("--seed", type=_u64, default=2013)
    sim.add_argument("--out", type=Path, default=Path("."))

    ref = sub.add_parser("reference", help="long-run Gibbs estimate of an experiment's functional")
    ref.add_argument("--config", required=True, type=Path)
    ref.add_argument("--id")
    ref.add_argument("--length", type=_positive_int, default=1_000_000)
    ref.add_argument("--seed", type=_u64)
    return parser


def _pick(configs, exp_id):
    if exp_id is None:
        if not configs:
            raise harness.ConfigError("config file lists no experiments")
        return configs[0]
    for cfg in configs:
        if cfg.id == exp_id:
            return cfg
    raise harness.ConfigError(f"no experiment with id {exp_id!r}")


def _print_table(rows):
    width = max(len(k) for k, _ in rows)
    for key, value in rows:
        print(f"{key:<{width}}  {value}")


def cmd_run(args) -> int:
    seed, configs = harness.load_config(args.config)
    seed = seed if args.seed is None else args.seed
    if args.only:
        configs = [_pick(configs, i) for i in args.only]
    runner = harness.Runner(seed, args.workers)
    reports = []
    for cfg in configs:
        rep = runner.run(cfg)
        log.info("%s: esjdr=%.4g mser=%.4g accept=%.4g", cfg.id, rep.esjdr, rep.mser, rep.accept_rate)
        reports.append(rep)
    args.out.mkdir(parents=True, exist_ok=True)
    text = harness.report_csv(reports)
    (args.out / "report.csv").write_text(text)
    sys.stdout.write(text)
    return 0


def cmd_bounds(args) -> int:
    if args.model == "normal-normal":
        gamma = 0.75 if args.gamma is None else args.gamma
        c_star = ergodicity.solve_cmh_c_threshold(gamma)
        q_star = ergodicity.solve_cmh_q_threshold(gamma)
        target = ergodicity.mass_target(gamma)
        _print_table([
            ("model", "normal-normal"),
            ("gamma", f"{gamma:.10g}"),
            ("c_star", f"{c_star:.10g}"),
            ("c_star_residual", f"{abs(ergodicity.interval_mass_at_mean(c_star) - target):.3e}"),
            ("q_star", f"{q_star:.10g}"),
        ])
        return 0
    gamma = 23.0 / 30.0 if args.gamma is None else args.gamma
    eps = ergodicity.solve_re_thresholds(args.K, args.m, args.a1, args.a2, gamma)
    target = ergodicity.mass_target(gamma)
    masses = ergodicity.re_block_bounds(eps, args.K, args.m, args.a1, args.a2)
    _print_table([
        ("model", "random-effects"),
        ("gamma", f"{gamma:.10g}"),
        ("mass_target", f"{target:.10g}"),
        ("eps_theta", f"{eps.eps_theta:.10g}"),
        ("eps_mu", f"{eps.eps_mu:.10g}"),
        ("eps_lambda", f"{eps.eps_lambda:.10g}"),
        ("eps_theta_residual", f"{abs(masses.eps_theta - target):.3e}"),
        ("eps_mu_residual", f"{abs(masses.eps_mu - target):.3e}"),
        ("eps_lambda_residual", f"{abs(masses.eps_lambda - target):.3e}"),
    ])
    return 0


def cmd_trace(args) -> int:
    seed, configs = harness.load_config(args.config)
    seed = seed if args.seed is None else args.seed
    cfg = _pick(configs, args.id)
    end = args.run_length if args.end is None else args.end
    try:
        req = harness.TraceRequest(args.run_length, args.start, end, args.coordinate)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    args.out.mkdir(parents=True, exist_ok=True)
    harness.emit_trace(cfg, req, seed, args.out / "trace.csv")
    print(args.out / "trace.csv")
    return 0


def cmd_simulate(args) -> int:
    data = simulate_re_data(args.K, args.m, {"a": args.a, "b": args.b}, seed=args.seed)
    args.out.mkdir(parents=True, exist_ok=True)
    for path in data.write(args.out):
        print(path)
    return 0


def cmd_reference(args) -> int:
    seed, configs = harness.load_config(args.config)
    seed = seed if args.seed is None else args.seed
    cfg = _pick(configs, args.id)
    model = cfg.build_model()
    coord = cfg.coordinate(model)
    beta = harness.run_reference(model, args.length, seed, coord)
    _print_table([("id", cfg.id), ("coordinate", coord), ("length", args.length), ("beta_star", harness.fmt(beta))])
    return 0


COMMANDS = {
    "run-experiment": cmd_run,
    "bounds": cmd_bounds,
    "trace": cmd_trace,
    "simulate-data": cmd_simulate,
    "reference": cmd_reference,
}


def main(argv=None) -> int:
    level = getattr(logging, os.environ.get("CMH_LOG", "WARNING").upper(), None)
    logging.basicConfig(
        level=level if isinstance(level, int) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, harness.ConfigError, ConfigurationError) as exc:
        print(f"cmhgibbs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (StuckProposalError, DomainError, ValueError, OSError) as exc:
        print(f"cmhgibbs: {args.command} failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
