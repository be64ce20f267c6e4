"""Inconsistency-tolerant variants of the second stage: a disparity slack
budget, rank perturbations evaluated through the utility interpolant, and a
mixed-binary relaxation that may discard a budgeted share of relations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp
from .errors import (
    InfeasibleProblemError,
    InvalidArgumentError,
    PerturbedRankOutOfDomainError,
    SolverError,
    ZeroUtilitySumError,
)
from .opa_pr import (
    NormalizedUtilityTable,
    PrProfile,
    _identity_rank_map,
    disparity_invariant,
    solve_stage2_closed_form,
    solve_stage2_lp,
)
from .profiles import WeightSolution

DISPARITY_BUDGET = "disparity_budget"
RANK_PERTURBATION = "rank_perturbation"
ERRONEOUS_ELICITATION = "erroneous_elicitation"


@dataclass
class InconsistencyConfig:
    """CLI/API routing record for one tolerant solve."""

    mode: str
    budget: float | None = None
    rank_shifts: list | None = None
    error_fractions: list | None = None
    big_m: float | None = None


def default_disparity_budget(profile: PrProfile) -> float:
    """One tenth of the unrelaxed optimal disparity."""
    return 0.1 * disparity_invariant(profile)


def solve_with_disparity_budget(
    profile: PrProfile,
    table: NormalizedUtilityTable,
    budget: float,
    rank_to_alternative: np.ndarray | None = None,
) -> tuple[WeightSolution, np.ndarray]:
    """Relax every disparity row by a nonnegative slack with total <= budget
    and maximize z; budget 0 reproduces the unrelaxed stage."""
    if budget < 0:
        raise InvalidArgumentError("slack budget must be nonnegative")
    profile.validate()
    table.validate()
    i, j, r = profile.n_experts, profile.n_attributes, profile.n_ranks
    if budget == 0.0:
        # all slack is pinned at zero; presolve down to the plain stage-2 LP
        solution = solve_stage2_lp(profile, table, rank_to_alternative)
        return solution, np.zeros((i, j, r))
    t = profile.expert_ranks.astype(float)
    s_lo = profile.worst_case_attribute_ranks.astype(float)
    n_rows = i * j * r
    nvars = 1 + 2 * n_rows  # z, w, gamma
    cons = []
    for a in range(i):
        for b in range(j):
            for p in range(r):
                idx = (a * j + b) * r + p
                row = np.zeros(nvars)
                row[0] = r * table.values[a, b, p]
                row[1 + idx] = -t[a] * s_lo[a, b]
                row[1 + n_rows + idx] = -1.0
                cons.append(lp.Constraint(row, lp.LESS_EQUAL, 0.0))
    norm = np.zeros(nvars)
    norm[1 : 1 + n_rows] = 1.0
    cons.append(lp.Constraint(norm, lp.EQUAL, 1.0))
    total = np.zeros(nvars)
    total[1 + n_rows :] = 1.0
    cons.append(lp.Constraint(total, lp.LESS_EQUAL, float(budget)))
    objective = np.zeros(nvars)
    objective[0] = 1.0
    solution = lp.solve_lp(lp.LinearProgram(lp.MAX, objective, cons))
    if solution.status != lp.OPTIMAL:
        raise SolverError(f"budget-relaxed LP ended {solution.status}")
    weights = solution.variable_values[1 : 1 + n_rows].reshape(i, j, r)
    slack = solution.variable_values[1 + n_rows :].reshape(i, j, r)
    if rank_to_alternative is None:
        rank_to_alternative = _identity_rank_map(i, j, r)
    return (
        WeightSolution(float(solution.variable_values[0]), weights, rank_to_alternative),
        slack,
    )


def solve_with_rank_perturbation(
    profile: PrProfile,
    rank_shifts: np.ndarray,
    rank_to_alternative: np.ndarray | None = None,
) -> WeightSolution:
    """Re-run the closed form with rank r read as r + shift, evaluating the
    utilities at the interpolated points R+1-(r+shift)."""
    profile.validate()
    shifts = np.asarray(rank_shifts, dtype=float)
    i, j, r = profile.n_experts, profile.n_attributes, profile.n_ranks
    if shifts.shape != (i, j, r):
        raise InvalidArgumentError("one rank shift per (expert, attribute, rank) required")
    if np.any(np.abs(shifts) >= 1.0):
        raise InvalidArgumentError("rank shifts must stay strictly inside (-1, 1)")
    ranks = np.arange(1, r + 1, dtype=float)
    points = (r + 1.0) - (ranks[None, None, :] + shifts)
    if points.min() < -1e-12 or points.max() > r + 1e-12:
        raise PerturbedRankOutOfDomainError(
            "a perturbed rank leaves the utility domain [0, R]"
        )
    table = np.empty((i, j, r))
    for a in range(i):
        for b in range(j):
            vals = profile.utilities[a][b].value(points[a, b])
            total = float(vals.sum())
            if total <= 1e-12:
                raise ZeroUtilitySumError("perturbed utilities vanish at every rank")
            table[a, b] = vals / total
    return solve_stage2_closed_form(profile, NormalizedUtilityTable(table), rank_to_alternative)


def solve_with_erroneous_elicitation(
    profile: PrProfile,
    table: NormalizedUtilityTable,
    z_target: float,
    error_fractions: np.ndarray,
    big_m: float | None = None,
    rank_to_alternative: np.ndarray | None = None,
) -> tuple[WeightSolution, np.ndarray]:
    """Maximize z while allowing up to fraction[i, j] * R relations per pair
    to be discarded through big-M binaries; fails if even the best selection
    cannot reach ``z_target``.

    Returns the solution and the boolean discard flags.  Dropping relations
    lets z exceed one, so a static big-M cannot deactivate a row; instead z
    is capped explicitly (any surviving row enforces
    z <= t*s/(R*U), so the cap is the largest such ratio) and each row gets
    M = R*U*z_cap, which makes flagged rows exactly vacuous.  ``big_m``
    overrides that with one scalar for all rows.
    """
    profile.validate()
    table.validate()
    fractions = np.asarray(error_fractions, dtype=float)
    i, j, r = profile.n_experts, profile.n_attributes, profile.n_ranks
    if fractions.shape != (i, j):
        raise InvalidArgumentError("one error fraction per (expert, attribute) required")
    if fractions.min() < 0.0 or fractions.max() > 1.0:
        raise InvalidArgumentError("error fractions must lie in [0, 1]")
    t = profile.expert_ranks.astype(float)
    s_lo = profile.worst_case_attribute_ranks.astype(float)
    scale = np.broadcast_to((t[:, None] * s_lo)[:, :, None], table.values.shape)
    positive = table.values > 1e-15
    ratio_cap = float(np.max(scale[positive] / (r * table.values[positive]))) if positive.any() else 0.0
    z_cap = max(ratio_cap, float(z_target), 1.0) + 1.0
    n_rows = i * j * r
    nvars = 1 + 2 * n_rows  # z, w, theta
    cons = []
    for a in range(i):
        for b in range(j):
            for p in range(r):
                idx = (a * j + b) * r + p
                row = np.zeros(nvars)
                row[0] = r * table.values[a, b, p]
                row[1 + idx] = -t[a] * s_lo[a, b]
                deactivation = big_m if big_m is not None else r * table.values[a, b, p] * z_cap
                row[1 + n_rows + idx] = -float(deactivation)
                cons.append(lp.Constraint(row, lp.LESS_EQUAL, 0.0))
    for a in range(i):
        for b in range(j):
            row = np.zeros(nvars)
            row[1 + n_rows + (a * j + b) * r : 1 + n_rows + (a * j + b + 1) * r] = 1.0
            cons.append(lp.Constraint(row, lp.LESS_EQUAL, float(fractions[a, b] * r)))
    norm = np.zeros(nvars)
    norm[1 : 1 + n_rows] = 1.0
    cons.append(lp.Constraint(norm, lp.EQUAL, 1.0))
    objective = np.zeros(nvars)
    objective[0] = 1.0
    bounds = [(0.0, z_cap)] + [(0.0, np.inf)] * n_rows + [(0.0, 1.0)] * n_rows
    program = lp.MixedProgram(
        lp.LinearProgram(lp.MAX, objective, cons, bounds),
        frozenset(range(1 + n_rows, nvars)),
    )
    solution = lp.solve_milp(program)
    if solution.status != lp.OPTIMAL:
        raise SolverError(f"relaxed mixed program ended {solution.status}")
    z = float(solution.variable_values[0])
    if z + 1e-9 < z_target:
        raise InfeasibleProblemError(
            f"even with every budgeted discard the best disparity {z:.6g} misses the target {z_target:.6g}"
        )
    weights = solution.variable_values[1 : 1 + n_rows].reshape(i, j, r)
    flags = solution.variable_values[1 + n_rows :].reshape(i, j, r) > 0.5
    if rank_to_alternative is None:
        rank_to_alternative = _identity_rank_map(i, j, r)
    return WeightSolution(z, weights, rank_to_alternative), flags
