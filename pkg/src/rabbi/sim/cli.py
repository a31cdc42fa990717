"""Command line front end.

Subcommands: `run <config>`, `preset pricing-demo`, `check-lp`,
`check-monotonicity <config>`, `dp <config>`.  Exit codes: 0 success,
1 usage error (including a missing config file), 2 runtime failure or
failed check.
"""

from __future__ import annotations

import argparse
import os
import sys

from .checks import run_lp_suite
from .config import build_instance, load_config
from .experiment import ExperimentConfig, run_experiment, write_report
from .monotonicity import check_bellman_monotonicity
from .. import knapsack, pricing

PRESET_LADDER = (1, 5, 10, 20, 40)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage problems; the contract here is 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _common_flags(parser, suppress: bool):
    parser.add_argument("--output", metavar="DIR",
                        default=argparse.SUPPRESS if suppress else None,
                        help="directory for result tables and figures "
                             "(default: the config's output_path, else '.')")
    parser.add_argument("--threads", type=_positive_int, metavar="N",
                        default=argparse.SUPPRESS if suppress else None,
                        help="replication workers (default: RABBI_THREADS "
                             "or the available parallelism)")
    parser.add_argument("--format", choices=("csv", "json"), dest="format",
                        default=argparse.SUPPRESS if suppress else "csv",
                        help="delimited output format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rabbi",
                     description="Re-solving LP policies for online "
                                 "resource allocation: regret experiments, "
                                 "self-checks, and exact oracles.")
    _common_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", help="key=value experiment file")
    _common_flags(run_p, suppress=True)

    preset = sub.add_parser("preset", help="run a built-in experiment")
    preset.add_argument("name", choices=("pricing-demo",))
    preset.add_argument("--k-max", type=_positive_int, default=10, metavar="K",
                        help="largest scaling factor (ladder 1,5,10,20,40)")
    preset.add_argument("--reps", type=_positive_int, default=10000,
                        metavar="R", help="replications per cell")
    preset.add_argument("--seed", type=int, default=7, metavar="S",
                        help="master seed")
    _common_flags(preset, suppress=True)

    lp_p = sub.add_parser("check-lp", help="randomized solver property suite")
    _common_flags(lp_p, suppress=True)

    mono = sub.add_parser("check-monotonicity",
                          help="exhaustive one-step dominance check")
    mono.add_argument("config", help="instance file (checked at k = 1)")
    _common_flags(mono, suppress=True)

    dp_p = sub.add_parser("dp", help="exact optimal online value")
    dp_p.add_argument("config", help="instance file (evaluated at k = 1)")
    _common_flags(dp_p, suppress=True)
    return parser


def _resolve_threads(value) -> int:
    if value is not None:
        return value
    env = os.environ.get("RABBI_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _load_params(path: str):
    if not os.path.exists(path):
        print(f"rabbi: error: config file not found: {path}", file=sys.stderr)
        return None
    return load_config(path)


def pricing_demo_config(k_max: int = 10, replications: int = 10000,
                        seed: int = 7) -> ExperimentConfig:
    """Dynamic pricing demo: prices (3,2,1) against a three-point
    valuation, horizon 20k, inventory 6k."""
    factors = tuple(k for k in PRESET_LADDER if k <= k_max)
    if not factors:
        raise ValueError(f"--k-max below the smallest ladder entry: {k_max}")
    params = {
        "setting": "pricing",
        "prices": (3.0, 2.0, 1.0),
        "support": (1.0, 2.0, 3.0),
        "probabilities": (0.3, 0.4, 0.3),
        "horizon": 20,
        "inventory": 6,
    }
    return ExperimentConfig(setting="pricing", instance_params=params,
                            scaling_factors=factors,
                            replications=replications, master_seed=seed,
                            policies=("rabbi", "static"), dp_oracle=True)


def _print_report(report, paths) -> None:
    for row in report.rows:
        gap = ("" if row.mean_dp_gap is None
               else f", dp gap {row.mean_dp_gap:.9g}")
        print(f"{row.setting} {row.policy} k={row.k}: mean regret "
              f"{row.mean_regret:.9g} +- {row.ci90_halfwidth:.3g} (90% CI)"
              f"{gap}")
    for path in paths:
        print(f"wrote {path}")


def _cmd_run(args, threads: int) -> int:
    params = _load_params(args.config)
    if params is None:
        return 1
    config = ExperimentConfig.from_params(params)
    report = run_experiment(config, threads=threads)
    paths = write_report(report, args.output, args.format)
    _print_report(report, paths)
    return 0


def _cmd_preset(args, threads: int) -> int:
    config = pricing_demo_config(args.k_max, args.reps, args.seed)
    report = run_experiment(config, threads=threads)
    paths = write_report(report, args.output, args.format)
    _print_report(report, paths)
    return 0


def _cmd_check_lp(_args, _threads: int) -> int:
    result = run_lp_suite()
    print(f"programs solved: {result.solved}")
    print(f"duality checks:  {result.duality_checked}")
    print(f"unit-split checks: {result.reduction_checked}")
    print(f"concavity checks: {result.concavity_checked}")
    for failure in result.failures:
        print(f"FAIL {failure}")
    print("lp suite:", "pass" if result.passed else "fail")
    return 0 if result.passed else 2


def _cmd_check_monotonicity(args, _threads: int) -> int:
    params = _load_params(args.config)
    if params is None:
        return 1
    instance = build_instance(params, k=1)
    report = check_bellman_monotonicity(instance)
    print(f"tuples checked: {report.triples_checked}")
    print(f"violations: {len(report.violations)} "
          f"({len(report.stray_violations)} outside exclusion sets)")
    print(f"max overshoot: {report.max_overshoot:.9g} "
          f"(one-step bound {report.rmax:.9g})")
    print("dominance:", "pass" if report.passed else "fail")
    return 0 if report.passed else 2


def _cmd_dp(args, _threads: int) -> int:
    params = _load_params(args.config)
    if params is None:
        return 1
    instance = build_instance(params, k=1)
    if isinstance(instance, knapsack.KnapsackInstance):
        value = knapsack.dp_online_value(instance)
    elif isinstance(instance, pricing.PricingInstance):
        value = pricing.dp_pricing_value(instance)[0]
    else:
        raise ValueError(f"no exact oracle for setting {params.get('setting')!r}")
    print(f"optimal online value: {value:.9g}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "preset": _cmd_preset,
    "check-lp": _cmd_check_lp,
    "check-monotonicity": _cmd_check_monotonicity,
    "dp": _cmd_dp,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.error("a subcommand is required")
    try:
        threads = _resolve_threads(args.threads)
        return _COMMANDS[args.command](args, threads)
    except SystemExit:
        raise
    except Exception as exc:  # runtime failure contract
        print(f"rabbi: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
