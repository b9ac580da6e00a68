#!/usr/bin/env python3
"""Smooth-pool benchmark: every policy vs the active one, JSONL + summary CSV.

Produces the inputs for the error-curve and balance plots:

    python3 scripts/run_benchmark.py --seeds 20 --out-dir results/
    plot --kind pehe --in results/benchmark.jsonl --out results/pehe.svg
"""

import argparse
import pathlib

from abc3.runner import ExperimentConfig, run_experiment, summarize, write_jsonl, write_summary_csv

POLICIES = ("abc3", "naive", "mackay", "ace", "leverage")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", default="synth:smooth-gp:200:5")
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--policies", default=",".join(POLICIES))
    parser.add_argument("--out-dir", default="results")
    args = parser.parse_args()

    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    records = []
    for policy in args.policies.split(","):
        config = ExperimentConfig(
            dataset=args.dataset, policy=policy, seeds=tuple(range(args.seeds))
        )
        result = run_experiment(config)
        for _, message in result.failures:
            print(f"warning: {policy}: {message}")
        records.extend(result.records)
        print(f"{policy}: {len(result.records)} records")

    write_jsonl(records, out_dir / "benchmark.jsonl")
    write_summary_csv(summarize(records), out_dir / "benchmark_summary.csv")
    print(f"wrote {out_dir}/benchmark.jsonl and {out_dir}/benchmark_summary.csv")


if __name__ == "__main__":
    main()
