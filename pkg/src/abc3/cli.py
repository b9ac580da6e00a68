"""Command-line harness.

Subcommands: ``run`` (one policy on one dataset, JSONL metrics out),
``bench`` (a list of configs, CSV summary out), ``gen-synthetic`` (write a
synthetic pool as CSV), ``check-assumption`` (imbalance-bound assumption
probe, CSV out). Exit codes: 0 success, 1 input/config error, 2 numerical
error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .data import SYNTHETIC_KINDS, gen_synthetic, load_csv, save_csv
from .errors import ConfigError, InputError, NumericalError, StateError
from .kernels import KernelSpec
from .metrics import check_assumption, write_assumption_csv
from .runner import (
    RUN_POLICIES,
    bench,
    config_from_dict,
    run_experiment,
    write_summary_csv,
)

__all__ = ["main", "cli"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; keep 1 for usage
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="abc3", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one policy over seeds, write JSONL metrics")
    run_p.add_argument("--config", help="JSON file with ExperimentConfig keys")
    run_p.add_argument("--dataset", help="CSV path or synth:kind:n:d[:seed]")
    run_p.add_argument("--policy", help=f"one of: {', '.join(RUN_POLICIES)}")
    run_p.add_argument("--seeds", help="comma-separated seed list, e.g. 0,1,2")
    run_p.add_argument("--out", help="JSONL output path")
    run_p.add_argument("--checkpoint-fraction", type=float, dest="checkpoint_fraction")
    run_p.add_argument("--train-fraction", type=float, dest="train_fraction")
    run_p.add_argument("--budget-steps", type=int, dest="budget_steps")
    run_p.add_argument("--alpha", type=float)
    run_p.add_argument("--null-hypothesis", action="store_true", default=None,
                       dest="null_hypothesis")
    run_p.add_argument("--no-refit-hyperparams", action="store_false", default=None,
                       dest="refit_hyperparams_at_checkpoints")
    run_p.add_argument("--scale-sample-n", type=int, dest="scale_sample_n")
    run_p.add_argument("--scale-tol", type=float, dest="scale_tol")
    run_p.add_argument("--scale-max-iters", type=int, dest="scale_max_iters")

    bench_p = sub.add_parser("bench", help="run several configs, write a CSV summary")
    bench_p.add_argument("--config", required=True, help='JSON file: {"configs": [...]}')
    bench_p.add_argument("--out", required=True, help="summary CSV path")

    gen_p = sub.add_parser("gen-synthetic", help="write a synthetic pool to CSV")
    gen_p.add_argument("--kind", required=True, help=f"one of: {', '.join(SYNTHETIC_KINDS)}")
    gen_p.add_argument("--n", required=True, type=int)
    gen_p.add_argument("--d", required=True, type=int)
    gen_p.add_argument("--seed", type=int, default=0)
    gen_p.add_argument("--out", required=True)

    chk_p = sub.add_parser("check-assumption", help="probe eps* <= 2 delta* over permutations")
    chk_p.add_argument("--dataset", required=True, help="pool CSV path")
    chk_p.add_argument("--permutations", type=int, default=100)
    chk_p.add_argument("--lengthscale", type=float, default=1.0)
    chk_p.add_argument("--seed", type=int, default=0)
    chk_p.add_argument("--out", required=True, help="gap CSV path")

    return parser


def _run_command(args) -> int:
    base: dict = {}
    if args.config:
        with open(args.config) as fh:
            base = json.load(fh)
    overrides = {
        key: getattr(args, key)
        for key in (
            "dataset",
            "policy",
            "out",
            "checkpoint_fraction",
            "train_fraction",
            "budget_steps",
            "alpha",
            "null_hypothesis",
            "refit_hyperparams_at_checkpoints",
        )
        if getattr(args, key) is not None
    }
    if args.seeds is not None:
        overrides["seeds"] = [int(s) for s in str(args.seeds).split(",") if s != ""]
    scale_over = {
        "sample_n": args.scale_sample_n,
        "tolerance": args.scale_tol,
        "max_iters": args.scale_max_iters,
    }
    scale_over = {k: v for k, v in scale_over.items() if v is not None}
    if scale_over:
        base_scale = dict(base.get("scale", {}))
        base_scale.update(scale_over)
        base["scale"] = base_scale
    base.update(overrides)
    if "dataset" not in base:
        raise ConfigError("run needs --dataset (or a config file providing it)")
    config = config_from_dict(base)
    result = run_experiment(config)
    for _, message in result.failures:
        print(f"warning: {message}", file=sys.stderr)
    if result.failures and not result.records:
        raise NumericalError("all seeds failed; see warnings above")
    print(f"wrote {len(result.records)} records" + (f" to {config.out}" if config.out else ""))
    return 0


def _bench_command(args) -> int:
    with open(args.config) as fh:
        payload = json.load(fh)
    if "configs" not in payload or not isinstance(payload["configs"], list):
        raise ConfigError('bench config must contain a "configs" list')
    configs = [config_from_dict(d) for d in payload["configs"]]
    rows, failures = bench(configs)
    write_summary_csv(rows, args.out)
    for message in failures:
        print(f"warning: {message}", file=sys.stderr)
    print(f"wrote {len(rows)} summary rows to {args.out}")
    return 0


def _gen_command(args) -> int:
    pool = gen_synthetic(args.kind, args.n, args.d, seed=args.seed)
    save_csv(pool, args.out)
    print(f"wrote {pool.n} x {pool.d} pool to {args.out}")
    return 0


def _check_command(args) -> int:
    pool = load_csv(args.dataset, null_hypothesis=True)
    kernel = KernelSpec(lengthscale=args.lengthscale)
    reports = check_assumption(
        kernel, pool, permutations=args.permutations, rng=np.random.default_rng(args.seed)
    )
    write_assumption_csv(reports, args.out)
    worst = min(r.min_gap for r in reports)
    print(f"wrote {len(reports)} rows to {args.out}; worst gap {worst:.6f}")
    return 0


def cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            return _run_command(args)
        if args.command == "bench":
            return _bench_command(args)
        if args.command == "gen-synthetic":
            return _gen_command(args)
        if args.command == "check-assumption":
            return _check_command(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (InputError, ConfigError, StateError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
