"""Orthogonal-access baselines and exhaustive oracles.

The OFDMA and fast-OFDM allocators give interference-free reference
points; the exhaustive searches certify the greedy heuristic and the
power solver on instances small enough to enumerate completely.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import replace

import numpy as np

from .allocation import allocate
from .clustering import build_clusters
from .errors import GridResolutionError, InstanceTooLargeError
from .power_opt import (
    OrderedCluster,
    cluster_objective,
    powers_from_tail,
    threshold_coefficients,
)
from .rate_model import (
    ClusterAssignment,
    PowerMatrix,
    RateReport,
    SubcarrierMap,
    build_report,
    interference_below,
    sic_member_rates,
)
from .scenario import Device, Scenario

__all__ = [
    "ofdma_allocate",
    "fast_ofdm_allocate",
    "half_tone_scenario",
    "mckp_oracle",
    "exhaustive_clustering",
    "grid_power_oracle",
]

_LOG2 = math.log(2.0)

# Exhaustive-search size limits, sized so a run stays in the seconds range.
MCKP_MAX_SUBCARRIERS = 12
MCKP_MAX_CLUSTERS = 4
EXHAUSTIVE_MAX_DEVICES = 5
EXHAUSTIVE_MAX_CLUSTERS = 2
EXHAUSTIVE_MAX_RANK = 3
EXHAUSTIVE_MAX_SUBCARRIERS = 6
GRID_MAX_USERS = 3


def _oma_rates(scenario: Scenario, tones_of: list[list[int]]) -> np.ndarray:
    noise = scenario.config.noise_per_subcarrier
    bw = scenario.config.subcarrier_bandwidth
    rates = np.zeros(scenario.num_devices)
    for dev, tones in enumerate(tones_of):
        if tones:
            h = scenario.gain_matrix[dev, tones]
            p = scenario.power_budgets[dev] / len(tones)
            rates[dev] = bw * float(np.log1p(h * p / noise).sum()) / _LOG2
    return rates


def ofdma_allocate(scenario: Scenario) -> tuple[np.ndarray, PowerMatrix, RateReport]:
    """Greedy one-device-per-subcarrier allocation.

    Each subcarrier (ascending index) goes to the unsatisfied device with
    the highest gain on it, or to the overall highest-gain device once
    everyone is satisfied.  A device splits its budget evenly over the
    tones it owns, so rates are plain interference-free Shannon rates.
    Returns (owner device per subcarrier with -1 for none, powers, report).
    """
    n = scenario.num_devices
    num_s = scenario.config.num_subcarriers
    owner = np.full(num_s, -1, dtype=int)
    tones_of: list[list[int]] = [[] for _ in range(n)]
    rates = np.zeros(n)
    thresholds = scenario.rate_thresholds

    for s in range(num_s):
        unsat = np.flatnonzero(rates < thresholds)
        pool = unsat if unsat.size else np.arange(n)
        dev = int(pool[np.argmax(scenario.gain_matrix[pool, s])])
        owner[s] = dev
        tones_of[dev].append(s)
        rates[dev] = _oma_rates(scenario, tones_of)[dev]

    watts = np.zeros((n, num_s))
    for dev, tones in enumerate(tones_of):
        if tones:
            watts[dev, tones] = scenario.power_budgets[dev] / len(tones)
    return owner, PowerMatrix(watts=watts), build_report(scenario, rates)


def half_tone_scenario(scenario: Scenario) -> Scenario:
    """The same cell on 2S half-bandwidth tones, gains duplicated per tone."""
    cfg = replace(
        scenario.config,
        num_subcarriers=2 * scenario.config.num_subcarriers,
        subcarrier_bandwidth=scenario.config.subcarrier_bandwidth / 2.0,
    )
    devices = tuple(
        Device(d.id, d.kind, np.repeat(d.gains, 2), d.rate_threshold,
               d.power_budget, d.distance)
        for d in scenario.devices
    )
    return Scenario(config=cfg, devices=devices)


def fast_ofdm_allocate(scenario: Scenario) -> tuple[np.ndarray, PowerMatrix, RateReport]:
    """OFDMA on the tone-split cell: twice the tones at half the bandwidth.

    The returned owner array and power matrix are indexed by half-tones;
    the report compares against the same per-device thresholds, so up to
    2S devices can be served.
    """
    return ofdma_allocate(half_tone_scenario(scenario))


def _tone_values_fixed(scenario, assignment, powers) -> np.ndarray:
    """value[s, c]: cluster-c sum rate on tone s with the given fixed powers."""
    cfg = scenario.config
    num_s, num_c = cfg.num_subcarriers, assignment.num_clusters
    values = np.zeros((num_s, num_c))
    for c, members in enumerate(assignment.clusters):
        if not members:
            continue
        gains = scenario.gain_matrix[members]  # (m, S)
        p = powers.watts[members]
        received = gains * p
        sinr = received / (cfg.noise_per_subcarrier + interference_below(received))
        values[:, c] = cfg.subcarrier_bandwidth * np.log1p(sinr).sum(axis=0) / _LOG2
    return values


def _tone_values_equal_split(scenario, assignment) -> np.ndarray:
    """value[s, c, k]: cluster-c sum rate on tone s when it owns k+1 tones.

    Under equal split every member transmits budget/(k+1) per owned tone,
    so the value of a tone depends only on how many tones the cluster owns.
    """
    cfg = scenario.config
    num_s, num_c = cfg.num_subcarriers, assignment.num_clusters
    values = np.zeros((num_s, num_c, num_s))
    for c, members in enumerate(assignment.clusters):
        if not members:
            continue
        gains = scenario.gain_matrix[members]
        budgets = scenario.power_budgets[members][:, None]
        for k in range(num_s):
            received = gains * (budgets / (k + 1))
            sinr = received / (cfg.noise_per_subcarrier + interference_below(received))
            values[:, c, k] = (
                cfg.subcarrier_bandwidth * np.log1p(sinr).sum(axis=0) / _LOG2
            )
    return values


def mckp_oracle(
    scenario: Scenario,
    assignment: ClusterAssignment,
    powers: PowerMatrix | None = None,
) -> SubcarrierMap:
    """Best subcarrier-to-cluster map by full enumeration of all C^S maps.

    With ``powers`` given, every candidate map is scored with those fixed
    transmit powers.  With ``powers=None`` each candidate is scored under
    the same equal-split rule the greedy allocator uses (budget divided by
    the cluster's owned-tone count), which is the evaluation the
    exhaustive clustering oracle needs to dominate the heuristic.  Ties go
    to the lexicographically smallest map.
    """
    cfg = scenario.config
    num_s, num_c = cfg.num_subcarriers, assignment.num_clusters
    if num_s > MCKP_MAX_SUBCARRIERS or num_c > MCKP_MAX_CLUSTERS:
        raise InstanceTooLargeError(
            f"S={num_s}, C={num_c} exceeds the exhaustive bounds "
            f"({MCKP_MAX_SUBCARRIERS}, {MCKP_MAX_CLUSTERS})"
        )
    if powers is not None:
        per_tone = _tone_values_fixed(scenario, assignment, powers)  # (S, C)
    else:
        per_tone = _tone_values_equal_split(scenario, assignment)  # (S, C, S)

    total = num_c**num_s
    chunk = 1 << 16
    weights = num_c ** np.arange(num_s - 1, -1, -1, dtype=np.int64)
    best_obj, best_map = -math.inf, None
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
        digits = (idx[:, None] // weights[None, :]) % num_c  # lexicographic maps
        if powers is not None:
            obj = per_tone[np.arange(num_s)[None, :], digits].sum(axis=1)
        else:
            counts = np.zeros((idx.size, num_c), dtype=np.int64)
            for c in range(num_c):
                counts[:, c] = (digits == c).sum(axis=1)
            rows = np.arange(idx.size)
            obj = np.zeros(idx.size)
            for s in range(num_s):
                owner_col = digits[:, s]
                obj += per_tone[s, owner_col, counts[rows, owner_col] - 1]
        k = int(np.argmax(obj))  # first maximum keeps the lexicographic winner
        if obj[k] > best_obj:
            best_obj = float(obj[k])
            best_map = digits[k].copy()
    return SubcarrierMap(owner=best_map.astype(int))


def _rank_orderings(urllc_members, mmtc_members):
    for u_perm in itertools.permutations(urllc_members):
        for m_perm in itertools.permutations(mmtc_members):
            yield list(u_perm) + list(m_perm)


def _valid_assignments(scenario: Scenario, num_clusters: int, k_max: int):
    """Every rank-ordered clustering satisfying the structural constraints."""
    n = scenario.num_devices
    for labels in itertools.product(range(num_clusters), repeat=n):
        sizes = [0] * num_clusters
        for c in labels:
            sizes[c] += 1
        if any(size == 1 or size > k_max for size in sizes):
            continue
        per_cluster = []
        for c in range(num_clusters):
            members = [d for d in range(n) if labels[d] == c]
            urllc = [d for d in members if scenario.is_urllc[d]]
            mmtc = [d for d in members if not scenario.is_urllc[d]]
            per_cluster.append(list(_rank_orderings(urllc, mmtc)))
        for combo in itertools.product(*per_cluster):
            yield ClusterAssignment(clusters=[list(order) for order in combo])


def _equal_split_outputs(scenario, assignment, sub_map):
    watts = np.zeros((scenario.num_devices, scenario.config.num_subcarriers))
    for c, members in enumerate(assignment.clusters):
        tones = sub_map.owned_by(c)
        if tones.size and members:
            for dev in members:
                watts[dev, tones] = scenario.power_budgets[dev] / tones.size
    powers = PowerMatrix(watts=watts)
    rates = np.zeros(scenario.num_devices)
    for c, members in enumerate(assignment.clusters):
        tones = sub_map.owned_by(c)
        if members:
            rates[members] = sic_member_rates(
                scenario.gain_matrix[np.ix_(members, tones)],
                watts[np.ix_(members, tones)],
                scenario.config.noise_per_subcarrier,
                scenario.config.subcarrier_bandwidth,
            )
    return powers, build_report(scenario, rates)


def exhaustive_clustering(
    scenario: Scenario,
) -> tuple[ClusterAssignment, SubcarrierMap, RateReport]:
    """Global optimum over all valid clusterings and subcarrier maps.

    Every structurally valid assignment is paired with its best map from
    :func:`mckp_oracle` under equal-split powers; the overall best sum
    rate wins.  Only tractable for a handful of devices and tones.
    """
    cfg = scenario.config
    if (
        scenario.num_devices > EXHAUSTIVE_MAX_DEVICES
        or cfg.num_clusters > EXHAUSTIVE_MAX_CLUSTERS
        or cfg.max_rank > EXHAUSTIVE_MAX_RANK
        or cfg.num_subcarriers > EXHAUSTIVE_MAX_SUBCARRIERS
    ):
        raise InstanceTooLargeError(
            "instance exceeds the exhaustive clustering bounds "
            f"(devices<={EXHAUSTIVE_MAX_DEVICES}, clusters<={EXHAUSTIVE_MAX_CLUSTERS}, "
            f"rank<={EXHAUSTIVE_MAX_RANK}, subcarriers<={EXHAUSTIVE_MAX_SUBCARRIERS})"
        )
    best = None
    for assignment in _valid_assignments(scenario, cfg.num_clusters, cfg.max_rank):
        sub_map = mckp_oracle(scenario, assignment)
        powers, report = _equal_split_outputs(scenario, assignment, sub_map)
        if best is None or report.sum_rate > best[2].sum_rate:
            best = (assignment, sub_map, report)
    if best is None:
        raise InstanceTooLargeError("no structurally valid clustering exists")
    return best


def heuristic_pipeline(
    scenario: Scenario,
) -> tuple[ClusterAssignment, SubcarrierMap, PowerMatrix, RateReport]:
    """Clustering followed by greedy allocation, as one call."""
    assignment = build_clusters(scenario)
    sub_map, powers, report = allocate(scenario, assignment)
    return assignment, sub_map, powers, report


def grid_power_oracle(
    cluster: OrderedCluster, step: float
) -> tuple[np.ndarray, float]:
    """Best feasible tail vector on a regular grid of resolution ``step``.

    Ground-truth bound for :func:`nbiot_noma.power_opt.maximize_rates` on
    clusters of up to three users.  Raises
    :class:`~nbiot_noma.errors.GridResolutionError` when no grid point is
    feasible, which also happens whenever the feasible set itself is empty.
    """
    n = cluster.size
    if n > GRID_MAX_USERS:
        raise InstanceTooLargeError(f"grid oracle supports up to {GRID_MAX_USERS} users")
    if not step > 0:
        raise ValueError("step must be positive")
    p_max = cluster.total_power
    delta, rho, theta = threshold_coefficients(cluster)
    g = cluster.normalized_gains
    bw = cluster.bandwidth_hz

    if n == 1:
        if p_max < theta[0]:
            raise GridResolutionError("no feasible grid point (empty feasible set)")
        tail = np.array([p_max])
        return powers_from_tail(tail), cluster_objective(tail, cluster)

    axis = np.arange(0.0, p_max + step / 2.0, step)
    if n == 2:
        t2 = axis
        feasible = (
            (t2 <= delta[0] * p_max - rho[0])
            & (t2 >= theta[1])
            & (p_max - t2 >= t2)
        )
        if not feasible.any():
            raise GridResolutionError("no feasible grid point; refine the step")
        t2 = t2[feasible]
        obj = (
            bw / _LOG2
            * (
                math.log1p(g[0] * p_max)
                + np.log1p(g[1] * t2)
                - np.log1p(g[0] * t2)
            )
        )
        k = int(np.argmax(obj))
        tail = np.array([p_max, t2[k]])
        return powers_from_tail(tail), float(obj[k])

    t2, t3 = np.meshgrid(axis, axis, indexing="ij")
    feasible = (
        (t2 <= delta[0] * p_max - rho[0])
        & (t3 <= delta[1] * t2 - rho[1])
        & (t3 >= theta[2])
        & (p_max - t2 >= t2 - t3)
        & (t2 - t3 >= t3)
    )
    if not feasible.any():
        raise GridResolutionError("no feasible grid point; refine the step")
    t2, t3 = t2[feasible], t3[feasible]
    obj = (
        bw / _LOG2
        * (
            math.log1p(g[0] * p_max)
            + np.log1p(g[1] * t2)
            - np.log1p(g[0] * t2)
            + np.log1p(g[2] * t3)
            - np.log1p(g[1] * t3)
        )
    )
    k = int(np.argmax(obj))
    tail = np.array([p_max, float(t2[k]), float(t3[k])])
    return powers_from_tail(tail), float(obj[k])
