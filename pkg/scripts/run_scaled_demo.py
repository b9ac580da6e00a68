#!/usr/bin/env python3
"""Large-pool demo: sample-and-optimize selection vs its ablations.

Runs the scaled policy, the sampled-only ablation and random selection on a
large null pool with a sub-percent query budget.

    python3 scripts/run_scaled_demo.py --pool-size 20000 --budget 100 --seeds 5
"""

import argparse

from abc3.scale import ScaleConfig, scaled_bench


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pool-size", type=int, default=20_000)
    parser.add_argument("--budget", type=int, default=100)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--sample-n", type=int, default=100)
    args = parser.parse_args()

    rows, failures = scaled_bench(
        args.pool_size,
        args.budget,
        ScaleConfig(sample_n=args.sample_n),
        seeds=tuple(range(args.seeds)),
    )
    for message in failures:
        print(f"warning: {message}")
    for row in rows:
        print(
            f"{row['policy']:>12}: mean error {row['mean_pehe']:.4f} "
            f"(sd {row['sd_pehe']:.4f}), {row['wall_ms_mean'] / 1e3:.1f}s selection time"
        )


if __name__ == "__main__":
    main()
