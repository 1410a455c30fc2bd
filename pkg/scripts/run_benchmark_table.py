#!/usr/bin/env python3
"""Print the distance-averaged benchmark table for every configured scheme.

Closed-form and simulated averages side by side, matching the CSV the
`simulate` verb writes.
"""

import argparse
from pathlib import Path

from fuotacast import benchmarks
from fuotacast.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--config", default=str(ROOT / "configs" / "baseline.yaml"))
    parser.add_argument("--runs", type=int, default=None)
    parser.add_argument("--seed", type=int, default=None)
    args = parser.parse_args()

    spec = load_config(args.config)
    _, summaries = benchmarks.run_suite(spec, "both", runs=args.runs, seed=args.seed)
    header = f"{'scheme':10s} {'EE (model)':>11s} {'EE (sim)':>9s} {'DT h (model)':>13s} {'DT h (sim)':>11s}"
    print(header)
    print("-" * len(header))
    for s in summaries:
        print(
            f"{s.scheme:10s} {s.avg_ee_norm_analysis:11.2f} {s.avg_ee_norm_sim:9.2f}"
            f" {s.avg_dt_hours_analysis:13.2f} {s.avg_dt_hours_sim:11.2f}"
        )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
