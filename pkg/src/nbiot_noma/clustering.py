"""Average-gain user clustering.

URLLC devices are sorted by descending average channel gain and placed at
the lowest ranks, round-robin across clusters; mMTC devices follow into
the remaining slots.  Ties in average gain break toward the lower device
id so the result is deterministic.
"""

from __future__ import annotations

import logging

import numpy as np

from .errors import CapacityExceededError, SingletonClusterError
from .rate_model import ClusterAssignment, Violation, structural_violations
from .scenario import Scenario

__all__ = [
    "average_gain",
    "average_gains",
    "cluster_urllc",
    "cluster_mmtc",
    "build_clusters",
    "check_structure",
]

log = logging.getLogger(__name__)


def average_gain(scenario: Scenario, device_id: int) -> float:
    """Mean linear power gain of one device across all subcarriers."""
    return float(scenario.gain_matrix[device_id].mean())


def average_gains(scenario: Scenario) -> np.ndarray:
    return scenario.gain_matrix.mean(axis=1)


def _sorted_by_gain(scenario: Scenario, ids) -> list[int]:
    gains = average_gains(scenario)
    return sorted(ids, key=lambda d: (-gains[d], d))


def cluster_urllc(scenario: Scenario, num_clusters: int) -> ClusterAssignment:
    """Place URLLC devices at the lowest ranks, strongest gain first.

    Device i of the sorted order goes to cluster i mod C; successive passes
    fill rank 1 of every cluster, then rank 2, and so on.
    """
    if num_clusters < 1:
        raise CapacityExceededError("need at least one cluster")
    k_max = scenario.config.max_rank
    clusters: list[list[int]] = [[] for _ in range(num_clusters)]
    for i, dev in enumerate(_sorted_by_gain(scenario, scenario.urllc_ids())):
        if i // num_clusters >= k_max:
            raise CapacityExceededError(
                f"{i + 1} URLLC devices exceed {num_clusters} clusters "
                f"x {k_max} ranks"
            )
        clusters[i % num_clusters].append(dev)
    return ClusterAssignment(clusters=clusters)


def cluster_mmtc(scenario: Scenario, partial: ClusterAssignment) -> ClusterAssignment:
    """Fill the remaining ranks with mMTC devices, strongest gain first.

    Empty clusters get their rank-1 member first (in cluster-index order);
    after that each pass adds one device to the lowest free rank of every
    non-full cluster.  Clusters that would end up with a single member are
    repaired by pulling the weakest mMTC out of the largest cluster.
    """
    k_max = scenario.config.max_rank
    clusters = [list(members) for members in partial.clusters]
    queue = _sorted_by_gain(scenario, scenario.mmtc_ids())

    for members in clusters:
        if not queue:
            break
        if not members:
            members.append(queue.pop(0))

    while queue:
        placed = False
        for members in clusters:
            if not queue:
                break
            if len(members) < k_max:
                members.append(queue.pop(0))
                placed = True
        if not placed:
            raise CapacityExceededError(
                f"{len(queue)} mMTC devices left but every cluster is full"
            )

    _repair_singletons(clusters, scenario, k_max)

    for c, members in enumerate(clusters):
        if members and all(scenario.is_urllc[d] for d in members):
            log.debug("cluster %d contains only URLLC devices", c)
    return ClusterAssignment(clusters=clusters)


def _repair_singletons(clusters, scenario: Scenario, k_max: int) -> None:
    """Move the weakest mMTC of the largest donor into each singleton cluster.

    A donor must keep at least two members, so it needs three or more and
    at least one mMTC.  The moved device lands at the singleton's rank 2,
    which keeps the URLLC-before-mMTC order intact.
    """
    gains = average_gains(scenario)
    while True:
        singles = [c for c, members in enumerate(clusters) if len(members) == 1]
        if not singles:
            return
        target = singles[0]
        donors = [
            c
            for c, members in enumerate(clusters)
            if len(members) >= 3 and any(not scenario.is_urllc[d] for d in members)
        ]
        if not donors:
            raise SingletonClusterError(
                f"cluster {target} has one member and no cluster can donate an mMTC"
            )
        donor = max(donors, key=lambda c: (len(clusters[c]), -c))
        movable = [d for d in clusters[donor] if not scenario.is_urllc[d]]
        dev = min(movable, key=lambda d: (gains[d], -d))
        clusters[donor].remove(dev)
        clusters[target].append(dev)


def build_clusters(scenario: Scenario, num_clusters: int | None = None) -> ClusterAssignment:
    """URLLC then mMTC clustering in one call."""
    if num_clusters is None:
        num_clusters = scenario.config.num_clusters
    return cluster_mmtc(scenario, cluster_urllc(scenario, num_clusters))


def check_structure(
    assignment: ClusterAssignment, scenario: Scenario
) -> list[Violation]:
    """Clustering constraints only (C5-C11); spectrum-free validation."""
    return structural_violations(assignment, scenario)
