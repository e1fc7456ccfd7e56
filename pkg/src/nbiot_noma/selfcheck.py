"""Fast oracle and invariant checks runnable from the command line.

Each check exercises one cross-validation pair on instances small enough
to finish in seconds: exhaustive searches against the greedy heuristic,
the transform identity behind the power objective, curvature signs, the
certified solver against the grid oracle, and constraint validation of
full pipeline output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .allocation import allocate
from .baselines import (
    exhaustive_clustering,
    grid_power_oracle,
    heuristic_pipeline,
    mckp_oracle,
)
from .clustering import build_clusters
from .errors import GridResolutionError
from .power_opt import (
    OrderedCluster,
    cluster_objective,
    maximize_rates,
    ordered_user_rates,
    probe_concavity,
    tail_powers,
)
from .rate_model import rate_report, validate
from .scenario import ScenarioConfig, generate_scenario

__all__ = ["CheckResult", "run_self_checks", "tiny_config", "random_feasible_cluster"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def __str__(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name}: {self.detail}"


def tiny_config(base: ScenarioConfig, rng: np.random.Generator) -> ScenarioConfig:
    """A random instance inside the exhaustive-search bounds.

    Device and cluster counts are drawn so that a structurally valid
    clustering exists and the round-robin fill cannot strand a singleton
    (total devices at least twice the cluster count).
    """
    num_clusters = int(rng.integers(1, 3))
    k_max = int(rng.integers(2, 4))
    total = int(rng.integers(2 * num_clusters, min(5, num_clusters * k_max) + 1))
    urllc = int(rng.integers(0, total))
    return replace(
        base,
        num_urllc=urllc,
        num_mmtc=total - urllc,
        num_subcarriers=int(rng.integers(2, 7)),
        num_clusters=num_clusters,
        max_rank=k_max,
        rng_seed=int(rng.integers(0, 2**32)),
    )


def random_feasible_cluster(
    rng: np.random.Generator, max_users: int = 3
) -> OrderedCluster:
    """A random threshold-feasible power subproblem with moderate gains.

    Normalized gains are kept within a few orders of magnitude of
    1/total_power so a 1000-point grid resolves the optimum; thresholds
    are drawn as a fraction of the equal-power rates, which keeps the
    feasible set nonempty by construction.
    """
    n = int(rng.integers(1, max_users + 1))
    p_max = float(rng.uniform(0.5, 4.0))
    gains = np.sort(np.exp(rng.uniform(np.log(0.5), np.log(50.0), size=n))) / p_max
    while n > 1 and np.any(np.diff(gains) / gains[:-1] < 0.05):
        gains = np.sort(np.exp(rng.uniform(np.log(0.5), np.log(50.0), size=n))) / p_max
    bandwidth = float(rng.uniform(0.5, 2.0))
    cluster = OrderedCluster(
        normalized_gains=gains,
        rate_thresholds=np.zeros(n),
        total_power=p_max,
        bandwidth_hz=bandwidth,
    )
    equal_rates = ordered_user_rates(np.full(n, p_max / n), cluster)
    thresholds = equal_rates * rng.uniform(0.0, 0.8, size=n)
    return OrderedCluster(
        normalized_gains=gains,
        rate_thresholds=thresholds,
        total_power=p_max,
        bandwidth_hz=bandwidth,
    )


def _check_transform_identity(rng, trials=200) -> CheckResult:
    worst = 0.0
    for _ in range(trials):
        cluster = random_feasible_cluster(rng)
        powers = rng.uniform(0.0, cluster.total_power, size=cluster.size)
        direct = math.fsum(ordered_user_rates(powers, cluster))
        via_tail = cluster_objective(tail_powers(powers), cluster)
        worst = max(worst, abs(direct - via_tail) / max(abs(direct), 1e-300))
    return CheckResult(
        "transform-identity", worst <= 1e-9, f"max relative mismatch {worst:.2e}"
    )


def _check_concavity(rng) -> CheckResult:
    gains = np.sort(np.exp(rng.uniform(np.log(0.01), np.log(100.0), size=3)))
    while np.any(np.diff(gains) / gains[:-1] < 0.05):
        gains = np.sort(np.exp(rng.uniform(np.log(0.01), np.log(100.0), size=3)))
    cluster = OrderedCluster(gains, np.zeros(3), 1.0, 1.0)
    report = probe_concavity(cluster, samples=500, rng=rng)
    return CheckResult(
        "concavity-probe",
        report.ok,
        f"{report.samples} samples, worst mismatch {report.max_relative_mismatch:.2e}",
    )


def _check_solver_vs_grid(rng, trials=10) -> CheckResult:
    worst = 0.0
    for _ in range(trials):
        cluster = random_feasible_cluster(rng)
        solution = maximize_rates(cluster)
        try:
            _, grid_obj = grid_power_oracle(cluster, cluster.total_power / 1000.0)
        except GridResolutionError:
            continue
        worst = max(worst, (grid_obj - solution.objective) / max(abs(grid_obj), 1e-300))
    return CheckResult(
        "solver-vs-grid", worst <= 1e-3, f"worst relative shortfall {worst:.2e}"
    )


def _check_oracle_dominance(base, rng, trials=15) -> CheckResult:
    failures = 0
    for _ in range(trials):
        cfg = tiny_config(base, rng)
        scenario = generate_scenario(cfg)
        assignment, _, powers, report = heuristic_pipeline(scenario)
        oracle_map = mckp_oracle(scenario, assignment, powers)
        oracle_rate = rate_report(scenario, assignment, oracle_map, powers).sum_rate
        if oracle_rate < report.sum_rate * (1 - 1e-9):
            failures += 1
    return CheckResult(
        "mckp-dominance", failures == 0, f"{trials} instances, {failures} failures"
    )


def _check_exhaustive_dominance(base, rng, trials=8) -> CheckResult:
    failures = 0
    for _ in range(trials):
        cfg = tiny_config(base, rng)
        scenario = generate_scenario(cfg)
        _, _, _, heuristic_report = heuristic_pipeline(scenario)
        _, _, best_report = exhaustive_clustering(scenario)
        if best_report.sum_rate < heuristic_report.sum_rate * (1 - 1e-9):
            failures += 1
    return CheckResult(
        "exhaustive-dominance", failures == 0, f"{trials} instances, {failures} failures"
    )


def _check_pipeline_constraints(base, rng, trials=3) -> CheckResult:
    worst_violations = 0
    for _ in range(trials):
        cfg = replace(
            base,
            num_urllc=6,
            num_mmtc=18,
            num_clusters=6,
            max_rank=4,
            rng_seed=int(rng.integers(0, 2**32)),
        )
        scenario = generate_scenario(cfg)
        assignment = build_clusters(scenario)
        sub_map, powers, _ = allocate(scenario, assignment)
        worst_violations += len(validate(assignment, sub_map, powers, scenario))
    return CheckResult(
        "pipeline-constraints", worst_violations == 0, f"{worst_violations} violations"
    )


def run_self_checks(base: ScenarioConfig | None = None, seed: int = 0) -> list[CheckResult]:
    """Run every check; all-pass means the oracle suite found no defect."""
    base = base if base is not None else ScenarioConfig()
    rng = np.random.default_rng(seed)
    return [
        _check_transform_identity(rng),
        _check_concavity(rng),
        _check_solver_vs_grid(rng),
        _check_oracle_dominance(base, rng),
        _check_exhaustive_dominance(base, rng),
        _check_pipeline_constraints(base, rng),
    ]
