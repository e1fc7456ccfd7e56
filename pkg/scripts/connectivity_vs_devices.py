#!/usr/bin/env python3
"""Count satisfied devices vs cell load for NOMA, OFDMA and fast-OFDM.

Thresholds are pinned to 0.1 kbps for every device so the comparison
isolates the connectivity ceilings: one device per tone for OFDMA, one
per half-tone for fast-OFDM, and a full cluster per tone for NOMA.
"""

import argparse
import dataclasses
import sys

sys.path.insert(0, "src")

from nbiot_noma.harness import ExperimentSpec, emit_csv, run_experiment, summarize
from nbiot_noma.scenario import ScenarioConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="connectivity_vs_devices.csv")
    parser.add_argument("--trials", type=int, default=50)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--k-max", type=int, default=2)
    parser.add_argument("--devices", default="24,48,60,96")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args()

    base = dataclasses.replace(
        ScenarioConfig(),
        max_rank=args.k_max,
        urllc_rate_threshold_range=(100.0, 100.0),
        mmtc_rate_threshold_range=(100.0, 100.0),
        rng_seed=args.seed,
    )
    spec = ExperimentSpec(
        base_config=base,
        sweep_variable="total_devices",
        sweep_values=tuple(int(v) for v in args.devices.split(",")),
        trials=args.trials,
        schemes=("noma", "ofdma", "fast_ofdm"),
        mmtc_to_urllc_ratio=3.0,
    )
    results = run_experiment(spec, workers=args.workers)
    emit_csv(results, args.out)

    cells = summarize(results)
    for (scheme, value), cell in sorted(cells.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        sat = cell["satisfied_count"]
        print(f"{scheme:>10} @ {value:>4} devices: {sat.mean:6.2f} satisfied")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
