"""Command-line front end: run experiments, solve benchmarks, check configs.

Exit codes: 0 success, 1 configuration/usage error, 2 runtime failure.
"""

import argparse
import sys
from dataclasses import replace

from .errors import ConfigError
from .harness import (
    derive_run_params,
    generate_costs,
    generate_disturbances,
    load_config,
    make_rng,
    run_experiment,
    solve_run_benchmarks,
    run_one_seed,
)
from .linalg import spectral_radius_estimate


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems instead of exiting with code 2."""

    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="olcontrol", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the full experiment and write CSVs")
    run.add_argument("--config", required=True, help="path to a JSON config")
    run.add_argument("--out", default=None, help="output directory (overrides config)")
    run.add_argument("--seed", type=int, default=None, help="override the base seed")
    run.add_argument("--runs", type=int, default=None, help="override the number of runs")
    run.add_argument("--horizon", type=int, default=None, help="override the horizon T")

    bench = sub.add_parser("bench", help="solve the hindsight benchmarks and print values")
    bench.add_argument("--config", required=True)

    check = sub.add_parser("check", help="print the stability certificate and derived constants")
    check.add_argument("--config", required=True)
    return parser


def _apply_overrides(cfg, args):
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.runs is not None:
        updates["n_runs"] = args.runs
    if args.horizon is not None:
        updates["t"] = args.horizon
    if args.out is not None:
        updates["output_dir"] = args.out
    if updates:
        cfg = replace(cfg, **updates).validate()
    return cfg


def _cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    result = run_experiment(cfg)
    print(f"wrote {len(result.reports)} run file(s) to {result.output_dir}")
    for k, msg in sorted(result.failures.items()):
        print(f"run {k} failed: {msg}", file=sys.stderr)
    return 2 if result.failures else 0


def _cmd_bench(args) -> int:
    cfg = load_config(args.config)
    for k in range(cfg.n_runs):
        record = run_one_seed(cfg, k, kinds=(), with_benchmarks=False)
        solve_run_benchmarks(cfg, record)
        line = f"run {k}: bench_u={record.bench_u.value:.6f} bench_m={record.bench_m.value:.6f}"
        if record.bench_x is not None:
            line += f" bench_x={record.bench_x.value:.6f}"
        print(line)
    return 0


def _cmd_check(args) -> int:
    cfg = load_config(args.config)
    rng = make_rng(cfg.seed)
    costs = generate_costs(cfg, rng)
    generate_disturbances(cfg, rng)
    params = derive_run_params(cfg, costs)
    print(f"spectral radius estimate: {spectral_radius_estimate(cfg.a):.6f}")
    print(f"gamma: {params.cert.gamma:.6f}")
    print(f"kappa: {params.cert.kappa:.6f}")
    print(f"state bound D: {params.bound.d:.6f}")
    print(f"smoothness L: {params.smooth.l:.6f}")
    print(f"step size eta: {params.eta:.8g}")
    return 0


def cli_main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "check":
            return _cmd_check(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary maps failures to exit 2
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
