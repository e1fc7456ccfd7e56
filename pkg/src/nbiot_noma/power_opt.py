"""Per-cluster power control via the tail-power transform.

For one cluster of n users ordered by ascending normalized gain
``g[j] = h[j] / (N0 * W)``, the SIC rate of user j (decoded j-th, with
power nonincreasing in j) is

    R_j = B * log2(1 + g[j] * P[j] / (1 + g[j] * (P[j+1] + ... + P[n]))).

Substituting the tail sums ``T[j] = P[j] + ... + P[n]`` turns the sum of
rates into a separable objective, sum of

    F_1(T_1) = B * log2(1 + g[1] * T[1]),
    F_j(T_j) = B * [log2(1 + g[j] * T[j]) - log2(1 + g[j-1] * T[j])],

each concave when the gains are ascending, under purely linear
constraints: per-user rate thresholds linearize to a chain
``T[j+1] <= delta[j] * T[j] - rho[j]``, the budget pins ``T[1] = P_max``,
and the power ordering becomes nonincreasing consecutive differences.
The maximizer here is certified by a linear-programming optimality gap:
for a concave objective, max over feasible y of grad(x) . (y - x) bounds
the true suboptimality of x from above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import (
    ConvergenceError,
    InfeasibleClusterError,
    NonmonotoneTailError,
)

__all__ = [
    "OrderedCluster",
    "PowerSolution",
    "ConcavityReport",
    "tail_powers",
    "powers_from_tail",
    "objective_term",
    "cluster_objective",
    "ordered_user_rates",
    "threshold_coefficients",
    "find_feasible_tail",
    "maximize_rates",
    "second_derivative_core",
    "probe_concavity",
]

_LOG2 = math.log(2.0)
MAX_ITERATIONS = 10_000


@dataclass(eq=False)
class OrderedCluster:
    """One cluster's power subproblem: gains ascending, shared budget."""

    normalized_gains: np.ndarray  # 1/W, ascending
    rate_thresholds: np.ndarray  # bps, aligned with the gains
    total_power: float  # W
    bandwidth_hz: float  # Hz factor in front of every log2 term

    def __post_init__(self):
        self.normalized_gains = np.asarray(self.normalized_gains, dtype=float)
        self.rate_thresholds = np.asarray(self.rate_thresholds, dtype=float)
        if self.normalized_gains.ndim != 1 or self.normalized_gains.size == 0:
            raise ValueError("normalized_gains must be a nonempty vector")
        if np.any(self.normalized_gains <= 0):
            raise ValueError("normalized gains must be strictly positive")
        if np.any(np.diff(self.normalized_gains) < 0):
            raise ValueError("normalized gains must be sorted ascending")
        if self.rate_thresholds.shape != self.normalized_gains.shape:
            raise ValueError("one rate threshold per user is required")
        if np.any(self.rate_thresholds < 0):
            raise ValueError("rate thresholds must be nonnegative")
        if not self.total_power > 0:
            raise ValueError("total_power must be positive")
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth_hz must be positive")

    @property
    def size(self) -> int:
        return self.normalized_gains.size


@dataclass
class PowerSolution:
    powers: np.ndarray  # W, nonincreasing
    objective: float  # bps
    tail: np.ndarray  # W, the tail-power vector behind `powers`
    optimality_gap: float  # bps, LP bound on remaining improvement
    iterations: int


def tail_powers(powers) -> np.ndarray:
    """Suffix sums T[j] = P[j] + ... + P[n]; linear and invertible."""
    p = np.asarray(powers, dtype=float)
    if np.any(p < 0):
        raise ValueError("powers must be nonnegative")
    return p[::-1].cumsum()[::-1]


def powers_from_tail(tail, *, tol: float = 0.0) -> np.ndarray:
    """Invert :func:`tail_powers`; requires a nonincreasing input.

    Differences within ``tol`` below zero are clipped to exactly zero so
    solver output rounds cleanly.
    """
    t = np.asarray(tail, dtype=float)
    p = np.empty_like(t)
    p[:-1] = t[:-1] - t[1:]
    p[-1] = t[-1]
    if np.any(p < -tol):
        j = int(np.flatnonzero(p < -tol)[0])
        raise NonmonotoneTailError(
            f"tail[{j}] < tail[{j + 1}]: no nonnegative power vector matches"
        )
    return np.maximum(p, 0.0)


def objective_term(index: int, tail_value: float, cluster: OrderedCluster) -> float:
    """Rate contribution of user ``index`` (0-based) as a function of its tail power."""
    g = cluster.normalized_gains
    scale = cluster.bandwidth_hz / _LOG2
    if index == 0:
        return scale * math.log1p(g[0] * tail_value)
    return scale * (
        math.log1p(g[index] * tail_value) - math.log1p(g[index - 1] * tail_value)
    )


def cluster_objective(tail, cluster: OrderedCluster) -> float:
    t = np.asarray(tail, dtype=float)
    g = cluster.normalized_gains
    scale = cluster.bandwidth_hz / _LOG2
    total = math.log1p(g[0] * t[0])
    if t.size > 1:
        total += float(np.sum(np.log1p(g[1:] * t[1:]) - np.log1p(g[:-1] * t[1:])))
    return scale * total


def _objective_gradient(tail, cluster: OrderedCluster) -> np.ndarray:
    """d(objective)/d(tail[j]); tail[0] is fixed by the budget elsewhere."""
    t = np.asarray(tail, dtype=float)
    g = cluster.normalized_gains
    grad = np.empty_like(t)
    grad[0] = g[0] / (1.0 + g[0] * t[0])
    if t.size > 1:
        grad[1:] = g[1:] / (1.0 + g[1:] * t[1:]) - g[:-1] / (1.0 + g[:-1] * t[1:])
    return cluster.bandwidth_hz / _LOG2 * grad


def ordered_user_rates(powers, cluster: OrderedCluster) -> np.ndarray:
    """Per-user SIC rates straight from the SINR definition (no transform)."""
    p = np.asarray(powers, dtype=float)
    g = cluster.normalized_gains
    later = np.concatenate([p[::-1].cumsum()[::-1][1:], [0.0]])
    sinr = g * p / (1.0 + g * later)
    return cluster.bandwidth_hz * np.log1p(sinr) / _LOG2


def threshold_coefficients(cluster: OrderedCluster):
    """Linearization coefficients (delta, rho, theta) of the rate thresholds."""
    g = cluster.normalized_gains
    ratio = cluster.rate_thresholds / cluster.bandwidth_hz
    delta = np.exp2(-ratio)
    rho = (1.0 - delta) / g
    theta = (np.exp2(ratio) - 1.0) / g
    return delta, rho, theta


def _constraint_system(cluster: OrderedCluster):
    """Inequalities ``A @ x <= b`` over x = (T[2], ..., T[n]); T[1] = P_max.

    Rows: the threshold chain T[j+1] <= delta[j]*T[j] - rho[j]; the
    difference ordering (T[j] - T[j+1]) nonincreasing with the last
    difference at least T[n]; and T[n] >= theta[n].
    """
    n = cluster.size
    p_max = cluster.total_power
    delta, rho, theta = threshold_coefficients(cluster)
    m = n - 1
    rows, rhs = [], []

    for j in range(n - 1):  # threshold chain, 0-based j pairs (j, j+1)
        row = np.zeros(m)
        row[j] = 1.0
        if j == 0:
            rhs.append(delta[0] * p_max - rho[0])
        else:
            row[j - 1] = -delta[j]
            rhs.append(-rho[j])
        rows.append(row)

    for j in range(n - 2):  # difference ordering: -T[j] + 2T[j+1] - T[j+2] <= 0
        row = np.zeros(m)
        row[j] += 2.0
        row[j + 1] -= 1.0
        if j == 0:
            rhs.append(p_max)
        else:
            row[j - 1] -= 1.0
            rhs.append(0.0)
        rows.append(row)

    row = np.zeros(m)  # last difference: 2*T[n] - T[n-1] <= 0
    row[m - 1] = 2.0
    if m >= 2:
        row[m - 2] -= 1.0
        rhs.append(0.0)
    else:
        rhs.append(p_max)
    rows.append(row)

    row = np.zeros(m)  # minimum tail for the last user: T[n] >= theta[n]
    row[m - 1] = -1.0
    rows.append(row)
    rhs.append(-theta[-1])

    return np.vstack(rows), np.array(rhs)


def find_feasible_tail(cluster: OrderedCluster) -> np.ndarray | None:
    """A feasible tail-power vector, or None when the thresholds are unmeetable.

    Solved as a linear program; the witness minimizes the sum of tail
    powers, which lands on the low-power corner of the feasible set.
    """
    n = cluster.size
    p_max = cluster.total_power
    if n == 1:
        _, _, theta = threshold_coefficients(cluster)
        return np.array([p_max]) if p_max >= theta[0] else None
    a_ub, b_ub = _constraint_system(cluster)
    res = optimize.linprog(
        c=np.ones(n - 1),
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(0.0, p_max)] * (n - 1),
        method="highs",
    )
    if not res.success:
        return None
    return np.concatenate([[p_max], res.x])


def _certified_gap(x, grad, a_ub, b_ub, p_max):
    """LP bound on how much any feasible point can improve on x."""
    res = optimize.linprog(
        c=-grad,
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=[(0.0, p_max)] * x.size,
        method="highs",
    )
    if not res.success:
        raise ConvergenceError("optimality-gap LP failed on a feasible instance")
    return float(grad @ (res.x - x)), res.x


def maximize_rates(
    cluster: OrderedCluster,
    *,
    gap_rtol: float = 1e-6,
    feasibility_atol: float = 1e-9,
    max_iterations: int = MAX_ITERATIONS,
) -> PowerSolution:
    """Maximize the cluster sum rate over the linear feasible set.

    A smooth constrained step (SLSQP) does the bulk of the work; the
    result is then certified by the LP optimality gap and, if the
    certificate is not yet met, refined with conditional-gradient steps
    that stay inside the polytope.  Raises :class:`InfeasibleClusterError`
    when no tail vector meets the thresholds and
    :class:`ConvergenceError` (carrying the best iterate) if tolerances
    are unmet after ``max_iterations``.
    """
    start = find_feasible_tail(cluster)
    if start is None:
        raise InfeasibleClusterError(
            "rate thresholds are unreachable within the power budget"
        )
    n = cluster.size
    p_max = cluster.total_power
    if n == 1:
        tail = np.array([p_max])
        return PowerSolution(
            powers=np.array([p_max]),
            objective=cluster_objective(tail, cluster),
            tail=tail,
            optimality_gap=0.0,
            iterations=0,
        )

    a_ub, b_ub = _constraint_system(cluster)

    def full(x):
        return np.concatenate([[p_max], x])

    def neg_obj(x):
        return -cluster_objective(full(x), cluster)

    def neg_grad(x):
        return -_objective_gradient(full(x), cluster)[1:]

    x = start[1:].copy()
    iterations = 0
    res = optimize.minimize(
        neg_obj,
        x,
        jac=neg_grad,
        method="SLSQP",
        bounds=[(0.0, p_max)] * (n - 1),
        constraints=[
            {"type": "ineq", "fun": lambda v: b_ub - a_ub @ v, "jac": lambda v: -a_ub}
        ],
        options={"maxiter": 500, "ftol": 1e-14},
    )
    iterations += int(res.nit)
    candidate = res.x
    violation = max(
        float(np.max(a_ub @ candidate - b_ub, initial=0.0)),
        float(np.max(-candidate, initial=0.0)),
        float(np.max(candidate - p_max, initial=0.0)),
    )
    if violation <= feasibility_atol:
        x = candidate

    best_x, best_obj = x, -neg_obj(x)
    while iterations < max_iterations:
        grad = -neg_grad(x)
        obj = -neg_obj(x)
        if obj > best_obj:
            best_x, best_obj = x, obj
        gap, vertex = _certified_gap(x, grad, a_ub, b_ub, p_max)
        if gap <= gap_rtol * max(abs(obj), 1e-300):
            tail = full(x)
            return PowerSolution(
                powers=powers_from_tail(tail, tol=feasibility_atol),
                objective=obj,
                tail=tail,
                optimality_gap=gap,
                iterations=iterations,
            )
        direction = vertex - x
        line = optimize.minimize_scalar(
            lambda t: neg_obj(x + t * direction),
            bounds=(0.0, 1.0),
            method="bounded",
            options={"xatol": 1e-12},
        )
        x = x + float(line.x) * direction
        iterations += 1
    raise ConvergenceError(
        f"optimality gap above tolerance after {max_iterations} iterations",
        best_powers=powers_from_tail(full(best_x), tol=feasibility_atol),
        best_objective=best_obj,
    )


def second_derivative_core(gain_low: float, gain_high: float, tail_value: float) -> float:
    """Closed-form second derivative of ln((1+gh*T)/(1+gl*T)) in T.

    The full objective term is bandwidth/ln(2) times this core, so the
    sign analysis carries over unchanged.  Nonpositive whenever
    gain_low <= gain_high; exactly zero when they are equal.
    """
    num = (
        gain_low**2
        - gain_high**2
        + 2.0 * tail_value * gain_high * gain_low * (gain_low - gain_high)
    )
    den = (1.0 + gain_high * tail_value) ** 2 * (1.0 + gain_low * tail_value) ** 2
    return num / den


@dataclass
class ConcavityReport:
    samples: int
    positive_closed_form: int
    positive_finite_difference: int
    max_relative_mismatch: float
    mismatched: int  # samples whose methods disagree beyond the tolerance

    @property
    def ok(self) -> bool:
        return (
            self.positive_closed_form == 0
            and self.positive_finite_difference == 0
            and self.mismatched == 0
        )


def probe_concavity(
    cluster: OrderedCluster,
    samples: int = 1000,
    rng: np.random.Generator | None = None,
    rel_tol: float = 1e-4,
) -> ConcavityReport:
    """Cross-check curvature signs numerically; failures are counted, not raised.

    Each sample picks a consecutive gain pair and a random positive tail
    value, then compares the closed-form second derivative against a
    central finite difference.
    """
    if cluster.size < 2:
        raise ValueError("need at least two users to probe curvature")
    g = cluster.normalized_gains
    if np.any(np.diff(g) <= 0):
        raise ValueError("gains must be strictly ascending for the probe")
    rng = np.random.default_rng(0) if rng is None else rng

    pos_closed = pos_fd = mismatched = 0
    worst = 0.0
    for _ in range(samples):
        j = int(rng.integers(1, cluster.size))
        lo, hi = g[j - 1], g[j]
        z = float(np.exp(rng.uniform(np.log(1e-2 / hi), np.log(1e2 / lo))))
        closed = second_derivative_core(lo, hi, z)

        def core(t):
            return math.log1p(hi * t) - math.log1p(lo * t)

        h = 2.2e-4 * (z + 1.0 / hi)
        fd = (core(z + h) - 2.0 * core(z) + core(z - h)) / (h * h)

        if closed > 0:
            pos_closed += 1
        if fd > 0:
            pos_fd += 1
        rel = abs(closed - fd) / max(abs(closed), 1e-300)
        worst = max(worst, rel)
        if rel > rel_tol:
            mismatched += 1
    return ConcavityReport(
        samples=samples,
        positive_closed_form=pos_closed,
        positive_finite_difference=pos_fd,
        max_relative_mismatch=worst,
        mismatched=mismatched,
    )
