"""Greedy subcarrier-to-cluster allocation with equal-split power updates.

Subcarriers are visited in ascending index.  While any device misses its
rate threshold, the next subcarrier joins whichever still-unsatisfied
cluster maximizes the resulting total sum rate; once every threshold is
met the remaining subcarriers are distributed by the same argmax over all
clusters.  After each assignment every member of the receiving cluster
spreads its full power budget evenly over the cluster's owned tones, so
row sums stay exactly on budget instead of leaking a fraction per update.
Rates and satisfaction flags are recomputed from the current powers after
every assignment, never extrapolated.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .clustering import check_structure
from .errors import InvalidAssignmentError
from .rate_model import (
    ClusterAssignment,
    PowerMatrix,
    RateReport,
    SubcarrierMap,
    build_report,
    sic_member_rates,
)
from .scenario import Scenario

__all__ = ["allocate", "equal_split"]


def equal_split(
    powers: PowerMatrix,
    scenario: Scenario,
    members: list[int],
    owned,
) -> PowerMatrix:
    """Spread each member's budget uniformly over the cluster's owned tones.

    p[d, s] = budget(d) / len(owned) on owned tones, 0 elsewhere in the row.
    """
    owned = np.asarray(owned, dtype=int)
    if owned.size == 0:
        raise ValueError("owned subcarrier set must be nonempty")
    watts = powers.watts.copy()
    for dev in members:
        watts[dev, :] = 0.0
        watts[dev, owned] = scenario.power_budgets[dev] / owned.size
    return PowerMatrix(watts=watts)


def _powers_for(scenario: Scenario, clusters, owned_tones) -> PowerMatrix:
    watts = np.zeros((scenario.num_devices, scenario.config.num_subcarriers))
    for members, tones in zip(clusters, owned_tones):
        if tones:
            for dev in members:
                watts[dev, tones] = scenario.power_budgets[dev] / len(tones)
    return PowerMatrix(watts=watts)


def allocate(
    scenario: Scenario,
    assignment: ClusterAssignment,
    on_step: Callable[[int, int, np.ndarray, int], None] | None = None,
) -> tuple[SubcarrierMap, PowerMatrix, RateReport]:
    """Run the greedy loop; returns the subcarrier map, powers and rates.

    ``on_step``, if given, is called after every assignment with
    (subcarrier, cluster, satisfied mask copy, phase) and exists for
    instrumentation in tests.
    """
    violations = check_structure(assignment, scenario)
    if violations:
        raise InvalidAssignmentError(violations)

    cfg = scenario.config
    num_s = cfg.num_subcarriers
    noise = cfg.noise_per_subcarrier
    tone_bw = cfg.subcarrier_bandwidth
    clusters = assignment.clusters
    num_c = len(clusters)
    budgets = scenario.power_budgets
    thresholds = scenario.rate_thresholds

    owned: list[list[int]] = [[] for _ in range(num_c)]
    member_rates = [np.zeros(len(m)) for m in clusters]
    rates = np.zeros(scenario.num_devices)
    log2 = math.log(2.0)

    def eval_cluster(c: int, tones: list[int]) -> np.ndarray:
        members = clusters[c]
        if not members or not tones:
            return np.zeros(len(members))
        gains = scenario.gain_matrix[np.ix_(members, tones)]
        per_tone = budgets[members] / len(tones)
        powers = np.broadcast_to(per_tone[:, None], gains.shape)
        return sic_member_rates(gains, powers, noise, tone_bw)

    def commit(s: int, c: int, new_rates: np.ndarray, phase: int) -> None:
        owned[c].append(s)
        member_rates[c] = new_rates
        rates[clusters[c]] = new_rates
        if on_step is not None:
            on_step(s, c, rates >= thresholds, phase)

    satisfied = rates >= thresholds
    total = 0.0
    next_s = 0

    # Phase 1: serve clusters that still contain an unsatisfied device.
    while next_s < num_s and not satisfied.all():
        s = next_s
        best_c, best_total, best_rates = -1, -math.inf, None
        for c in range(num_c):
            members = clusters[c]
            if not members or satisfied[members].all():
                continue
            cand = eval_cluster(c, owned[c] + [s])
            cand_total = total - member_rates[c].sum() + cand.sum()
            if cand_total > best_total:
                best_c, best_total, best_rates = c, cand_total, cand
        if best_c < 0:
            break  # no nonempty cluster holds an unsatisfied device
        total = best_total
        commit(s, best_c, best_rates, phase=1)
        satisfied = rates >= thresholds
        next_s += 1

    # Phase 2: spend leftover spectrum on whichever cluster gains the most.
    for s in range(next_s, num_s):
        best_c, best_total, best_rates = -1, -math.inf, None
        for c in range(num_c):
            if not clusters[c]:
                continue
            cand = eval_cluster(c, owned[c] + [s])
            cand_total = total - member_rates[c].sum() + cand.sum()
            if cand_total > best_total:
                best_c, best_total, best_rates = c, cand_total, cand
        total = best_total
        commit(s, best_c, best_rates, phase=2)

    owner = np.full(num_s, -1, dtype=int)
    for c, tones in enumerate(owned):
        owner[tones] = c
    sub_map = SubcarrierMap(owner=owner)
    powers = _powers_for(scenario, clusters, owned)
    return sub_map, powers, build_report(scenario, rates)
