#!/usr/bin/env python3
"""Sweep the device count and compare NOMA vs OFDMA sum rate.

Writes one CSV row per (scheme, sweep value, trial) and prints the
per-cell means with 95% intervals.
"""

import argparse
import dataclasses
import sys

sys.path.insert(0, "src")

from nbiot_noma.harness import ExperimentSpec, emit_csv, run_experiment, summarize
from nbiot_noma.scenario import ScenarioConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="sum_rate_vs_devices.csv")
    parser.add_argument("--trials", type=int, default=100)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--k-max", type=int, default=8)
    parser.add_argument("--devices", default="24,48,72,96,120")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    base = dataclasses.replace(ScenarioConfig(), max_rank=args.k_max, rng_seed=args.seed)
    spec = ExperimentSpec(
        base_config=base,
        sweep_variable="total_devices",
        sweep_values=tuple(int(v) for v in args.devices.split(",")),
        trials=args.trials,
        schemes=("noma", "ofdma"),
        mmtc_to_urllc_ratio=3.0,
    )
    results = run_experiment(spec, workers=args.workers)
    emit_csv(results, args.out)

    cells = summarize(results)
    for (scheme, value), cell in sorted(cells.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        rate = cell["sum_rate_bps"]
        half = "" if rate.half_width is None else f" +- {rate.half_width / 1e6:.3f}"
        print(f"{scheme:>6} @ {value:>4} devices: {rate.mean / 1e6:.3f} Mbps{half}")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
