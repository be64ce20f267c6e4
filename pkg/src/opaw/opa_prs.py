"""Robust satisficing on top of the two-stage weights: accept a target
disparity alpha * z and minimize how fast the target can be violated as the
expert ranks drift inside their intervals."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lp
from .errors import InvalidProfileError, SolverError
from .opa import aggregate_weights
from .opa_pr import (
    NormalizedUtilityTable,
    PrProfile,
    _identity_rank_map,
    disparity_invariant,
)
from .profiles import PrsResult, WeightSolution


@dataclass
class PrsInstance:
    profile: PrProfile
    table: NormalizedUtilityTable
    expert_rank_intervals: np.ndarray  # (I, 2) rows [lo, hi] around the nominal rank
    alpha: float

    def __post_init__(self):
        self.expert_rank_intervals = np.asarray(self.expert_rank_intervals, dtype=float)

    def validate(self):
        self.profile.validate()
        self.table.validate()
        iv = self.expert_rank_intervals
        t = self.profile.expert_ranks.astype(float)
        if iv.shape != (self.profile.n_experts, 2):
            raise InvalidProfileError("one [lo, hi] interval per expert required")
        if np.any(iv[:, 0] > t) or np.any(iv[:, 1] < t):
            raise InvalidProfileError("intervals must contain the nominal expert ranks")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidProfileError("target level alpha must lie in [0, 1]")


def build_prs_lp(instance: PrsInstance) -> lp.LinearProgram:
    """Tractable form of the satisficing guarantee
    t~ * s_lo * w >= alpha*R*U*z - eta_i * |t~ - t_i|  for every t~ in the
    expert's rank interval.

    Variables are [w, eta (per expert), eps_lo, eps_hi (per row)] and the
    objective minimizes sum(eta).  Dualizing the interval infimum per
    (i, j, r) row yields the target family
    t*s_lo*w - (t-lo)*eps_lo - (hi-t)*eps_hi >= alpha*R*U*z and the
    absolute-value envelope eta_i >= |eps_lo - eps_hi - s_lo*w|; sharing the
    duals across an expert's rows would make even degenerate intervals carry
    spurious fragility, so they are indexed per row.
    """
    instance.validate()
    profile, table = instance.profile, instance.table
    i, j, r = profile.n_experts, profile.n_attributes, profile.n_ranks
    t = profile.expert_ranks.astype(float)
    s_lo = profile.worst_case_attribute_ranks.astype(float)
    lo = instance.expert_rank_intervals[:, 0]
    hi = instance.expert_rank_intervals[:, 1]
    z_star = disparity_invariant(profile)

    nw = i * j * r
    nvars = 3 * nw + i
    eta0, lo0, hi0 = nw, nw + i, 2 * nw + i
    cons = []
    for a in range(i):
        for b in range(j):
            for p in range(r):
                target = instance.alpha * r * table.values[a, b, p] * z_star
                w_col = (a * j + b) * r + p
                row = np.zeros(nvars)
                row[w_col] = t[a] * s_lo[a, b]
                row[lo0 + w_col] = -(t[a] - lo[a])
                row[hi0 + w_col] = -(hi[a] - t[a])
                cons.append(lp.Constraint(row, lp.GREATER_EQUAL, target))
                row = np.zeros(nvars)
                row[lo0 + w_col] = 1.0
                row[hi0 + w_col] = -1.0
                row[w_col] = -s_lo[a, b]
                row[eta0 + a] = -1.0
                cons.append(lp.Constraint(row, lp.LESS_EQUAL, 0.0))
                row = np.zeros(nvars)
                row[lo0 + w_col] = -1.0
                row[hi0 + w_col] = 1.0
                row[w_col] = s_lo[a, b]
                row[eta0 + a] = -1.0
                cons.append(lp.Constraint(row, lp.LESS_EQUAL, 0.0))
    norm = np.zeros(nvars)
    norm[:nw] = 1.0
    cons.append(lp.Constraint(norm, lp.EQUAL, 1.0))
    objective = np.zeros(nvars)
    objective[eta0 : eta0 + i] = 1.0
    return lp.LinearProgram(lp.MIN, objective, cons)


def solve_opa_prs(
    instance: PrsInstance, rank_to_alternative: np.ndarray | None = None
) -> PrsResult:
    solution = lp.solve_lp(build_prs_lp(instance))
    if solution.status != lp.OPTIMAL:
        raise SolverError(f"satisficing LP ended {solution.status}")
    profile = instance.profile
    i, j, r = profile.n_experts, profile.n_attributes, profile.n_ranks
    x = solution.variable_values
    nw = i * j * r
    weights = x[:nw].reshape(i, j, r)
    if rank_to_alternative is None:
        rank_to_alternative = _identity_rank_map(i, j, r)
    z_star = disparity_invariant(profile)
    sol = WeightSolution(instance.alpha * z_star, weights, rank_to_alternative)
    return PrsResult(
        eta=x[nw : nw + i].copy(),
        epsilon_lower=x[nw + i : nw + i + nw].reshape(i, j, r).copy(),
        epsilon_upper=x[nw + i + nw :].reshape(i, j, r).copy(),
        solution=sol,
        groups=aggregate_weights(sol),
        z_target=instance.alpha * z_star,
        alpha=instance.alpha,
    )


def fragility(slack, interval: tuple[float, float], nominal: float) -> float:
    """Largest nonpositive violation rate eta with
    slack(t) >= eta * |t - nominal| across the whole interval.

    ``slack`` maps a candidate rank to a vector of slack values that are
    affine in the rank, so the binding ratios sit at the interval endpoints
    once slack(nominal) >= 0; a negative slack at the nominal rank leaves no
    feasible eta and the measure is -inf (infeasible target).
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not lo <= nominal <= hi:
        raise InvalidProfileError("nominal rank must lie inside the interval")
    if np.min(np.asarray(slack(nominal), dtype=float)) < -1e-12:
        return -math.inf
    phi = 0.0
    for point in (lo, hi):
        dist = abs(point - nominal)
        if dist <= 0.0:
            continue
        phi = min(phi, float(np.min(np.asarray(slack(point), dtype=float))) / dist)
    return phi


def brute_force_fragility(
    slack, interval: tuple[float, float], nominal: float, grid_density: int
) -> float:
    """Same measure evaluated on a dense rank grid plus both endpoints;
    oracle for the endpoint evaluation above."""
    if grid_density < 2:
        raise InvalidProfileError("grid_density must be at least 2")
    lo, hi = float(interval[0]), float(interval[1])
    points = np.unique(np.concatenate([np.linspace(lo, hi, grid_density), [lo, hi, nominal]]))
    phi = 0.0
    for point in points:
        values = np.asarray(slack(float(point)), dtype=float)
        dist = abs(point - nominal)
        if dist <= 1e-15:
            if np.min(values) < -1e-12:
                return -math.inf
            continue
        phi = min(phi, float(np.min(values)) / dist)
    return phi


def disparity_slack(instance: PrsInstance, weights: np.ndarray, expert: int):
    """Slack family of one expert at fixed weights: target minus achieved
    disparity for every (attribute, rank) pair, affine in the candidate rank."""
    profile, table = instance.profile, instance.table
    r = profile.n_ranks
    s_lo = profile.worst_case_attribute_ranks.astype(float)[expert]
    z_star = disparity_invariant(profile)
    targets = instance.alpha * r * table.values[expert] * z_star  # (J, R)
    w = weights[expert]  # (J, R)

    def slack(candidate_rank: float) -> np.ndarray:
        return (targets - candidate_rank * s_lo[:, None] * w).ravel()

    return slack
