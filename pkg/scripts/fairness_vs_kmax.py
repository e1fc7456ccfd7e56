#!/usr/bin/env python3
"""Compare Jain's fairness index across cluster depths and against OFDMA."""

import argparse
import dataclasses
import sys

sys.path.insert(0, "src")

from nbiot_noma.harness import ExperimentSpec, emit_csv, run_experiment, summarize
from nbiot_noma.scenario import ScenarioConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="fairness_vs_kmax.csv")
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--devices", type=int, default=96)
    parser.add_argument("--k-values", default="2,4")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    urllc = args.devices // 4
    base = dataclasses.replace(
        ScenarioConfig(),
        num_urllc=urllc,
        num_mmtc=args.devices - urllc,
        rng_seed=args.seed,
    )
    spec = ExperimentSpec(
        base_config=base,
        sweep_variable="k_max",
        sweep_values=tuple(int(v) for v in args.k_values.split(",")),
        trials=args.trials,
        schemes=("noma", "ofdma"),
        mmtc_to_urllc_ratio=3.0,
    )
    results = run_experiment(spec, workers=args.workers)
    emit_csv(results, args.out)

    cells = summarize(results)
    for (scheme, k), cell in sorted(cells.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        fair = cell["fairness"]
        half = "" if fair.half_width is None else f" +- {fair.half_width:.4f}"
        print(f"{scheme:>6} (k_max={k}): Jain {fair.mean:.4f}{half}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
