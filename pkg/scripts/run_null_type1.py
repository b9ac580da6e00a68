#!/usr/bin/env python3
"""Null-hypothesis benchmark (y1 == y0): type-1 error rates per checkpoint.

    python3 scripts/run_null_type1.py --seeds 20 --out results/null.jsonl
    plot --kind type1 --in results/null.jsonl --out results/type1.svg
"""

import argparse
import pathlib

from abc3.runner import ExperimentConfig, run_experiment, write_jsonl


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--dataset", default="synth:null:200:3")
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--policies", default="abc3,naive,mackay")
    parser.add_argument("--out", default="results/null.jsonl")
    args = parser.parse_args()

    pathlib.Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    records = []
    for policy in args.policies.split(","):
        result = run_experiment(
            ExperimentConfig(dataset=args.dataset, policy=policy, seeds=tuple(range(args.seeds)))
        )
        for _, message in result.failures:
            print(f"warning: {policy}: {message}")
        records.extend(result.records)
        rates = [r.type1_rate for r in result.records if r.frac_observed == 1.0]
        print(f"{policy}: mean full-budget rejection rate {sum(rates) / len(rates):.4f}")
    write_jsonl(records, args.out)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
