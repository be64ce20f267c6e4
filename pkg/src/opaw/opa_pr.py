"""Preference-robust ordinal priority: worst-case utilities feed a second
weight-disparity stage solved in closed form (LP retained as cross-check)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import lp
from .errors import (
    AmbiguitySetEmptyError,
    BoundUndefinedError,
    InvalidProfileError,
    SolverError,
    ZeroUtilitySumError,
)
from .opa import aggregate_weights
from .profiles import GroupWeights, RankingProfile, WeightSolution
from .utility import (
    PiecewiseLinearUtility,
    ScenarioSet,
    Stage1Result,
    UtilityAmbiguitySpec,
    solve_worst_case_utility,
)


@dataclass
class PrProfile:
    """Stage-2 input: expert ranks, attribute rank intervals, and one
    worst-case utility per expert/attribute pair."""

    expert_ranks: np.ndarray
    attribute_rank_intervals: np.ndarray  # (I, J, 2) rows of [lo, hi]
    utilities: list[list[PiecewiseLinearUtility]]
    n_ranks: int

    def __post_init__(self):
        self.expert_ranks = np.asarray(self.expert_ranks, dtype=int)
        self.attribute_rank_intervals = np.asarray(self.attribute_rank_intervals, dtype=int)

    @property
    def n_experts(self) -> int:
        return self.expert_ranks.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.attribute_rank_intervals.shape[1]

    @property
    def worst_case_attribute_ranks(self) -> np.ndarray:
        # Interval uncertainty in the rank denominators binds at the lower end.
        return self.attribute_rank_intervals[:, :, 0]

    def validate(self):
        i = self.n_experts
        if self.attribute_rank_intervals.ndim != 3 or self.attribute_rank_intervals.shape[2] != 2:
            raise InvalidProfileError("attribute_rank_intervals must be (experts, attributes, 2)")
        j = self.n_attributes
        if self.attribute_rank_intervals.shape[0] != i:
            raise InvalidProfileError("one interval row per expert required")
        lo = self.attribute_rank_intervals[:, :, 0]
        hi = self.attribute_rank_intervals[:, :, 1]
        if lo.min() < 1 or hi.max() > j or np.any(lo > hi):
            raise InvalidProfileError(f"intervals must satisfy 1 <= lo <= hi <= {j}")
        if self.expert_ranks.min() < 1 or self.expert_ranks.max() > i:
            raise InvalidProfileError(f"expert ranks must lie in 1..{i}")
        if len(self.utilities) != i or any(len(row) != j for row in self.utilities):
            raise InvalidProfileError("one utility per expert/attribute pair required")
        if self.n_ranks < 1:
            raise InvalidProfileError("need at least one rank position")


@dataclass
class NormalizedUtilityTable:
    """values[i, j, r-1] is the share of utility mass the alternative ranked
    r receives under expert i and attribute j; each (i, j) row sums to one."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)

    def validate(self, tol: float = 1e-12):
        sums = self.values.sum(axis=2)
        if np.any(np.abs(sums - 1.0) > max(tol, 1e-12)):
            raise InvalidProfileError("each utility row must sum to one")
        if self.values.min() < -tol:
            raise InvalidProfileError("normalized utilities must be nonnegative")


def normalize_utilities(profile: PrProfile) -> NormalizedUtilityTable:
    """Utility value of rank r is u(R+1-r) scaled by the total mass
    sum_r u(r); rank 1 therefore gets the largest share."""
    profile.validate()
    r = profile.n_ranks
    points = np.arange(r, 0, -1, dtype=float)  # R+1-r for r = 1..R
    table = np.empty((profile.n_experts, profile.n_attributes, r))
    for i in range(profile.n_experts):
        for j in range(profile.n_attributes):
            vals = profile.utilities[i][j].value(points)
            total = float(vals.sum())
            if total <= 1e-12:
                raise ZeroUtilitySumError(
                    f"utility of expert {i}, attribute {j} vanishes at every rank"
                )
            table[i, j] = vals / total
    return NormalizedUtilityTable(table)


def _identity_rank_map(i: int, j: int, r: int) -> np.ndarray:
    return np.broadcast_to(np.arange(r), (i, j, r)).copy()


def build_stage2_lp(profile: PrProfile, table: NormalizedUtilityTable) -> lp.LinearProgram:
    """max z subject to R*U_ijr*z <= t_i * s_lo_ij * w_ijr and sum(w) = 1."""
    profile.validate()
    table.validate()
    i, j = profile.n_experts, profile.n_attributes
    r = profile.n_ranks
    s_lo = profile.worst_case_attribute_ranks
    nvars = 1 + i * j * r
    cons = []
    for a in range(i):
        for b in range(j):
            scale = float(profile.expert_ranks[a] * s_lo[a, b])
            for p in range(r):
                row = np.zeros(nvars)
                row[0] = r * table.values[a, b, p]
                row[1 + (a * j + b) * r + p] = -scale
                cons.append(lp.Constraint(row, lp.LESS_EQUAL, 0.0))
    norm = np.zeros(nvars)
    norm[1:] = 1.0
    cons.append(lp.Constraint(norm, lp.EQUAL, 1.0))
    objective = np.zeros(nvars)
    objective[0] = 1.0
    return lp.LinearProgram(lp.MAX, objective, cons)


def solve_stage2_lp(
    profile: PrProfile,
    table: NormalizedUtilityTable,
    rank_to_alternative: np.ndarray | None = None,
) -> WeightSolution:
    solution = lp.solve_lp(build_stage2_lp(profile, table))
    if solution.status != lp.OPTIMAL:
        raise SolverError(f"stage-2 LP ended {solution.status}")
    i, j = profile.n_experts, profile.n_attributes
    r = profile.n_ranks
    weights = solution.variable_values[1:].reshape(i, j, r)
    if rank_to_alternative is None:
        rank_to_alternative = _identity_rank_map(i, j, r)
    return WeightSolution(float(solution.variable_values[0]), weights, rank_to_alternative)


def solve_stage2_closed_form(
    profile: PrProfile,
    table: NormalizedUtilityTable,
    rank_to_alternative: np.ndarray | None = None,
) -> WeightSolution:
    """All disparity constraints are active at the optimum, so
    w_ijr = R U_ijr z / (t_i s_lo_ij) and normalization fixes z."""
    profile.validate()
    table.validate()
    r = profile.n_ranks
    t = profile.expert_ranks.astype(float)
    s_lo = profile.worst_case_attribute_ranks.astype(float)
    coef = r * table.values / (t[:, None, None] * s_lo[:, :, None])
    z = 1.0 / coef.sum()
    weights = coef * z
    if rank_to_alternative is None:
        i, j = profile.n_experts, profile.n_attributes
        rank_to_alternative = _identity_rank_map(i, j, r)
    return WeightSolution(float(z), weights, rank_to_alternative)


def disparity_invariant(profile: PrProfile) -> float:
    """Optimal disparity depends only on the rank denominators:
    1 / (R * sum_i (1/t_i) * sum_j (1/s_lo_ij))."""
    t = profile.expert_ranks.astype(float)
    s_lo = profile.worst_case_attribute_ranks.astype(float)
    return float(1.0 / (profile.n_ranks * (1.0 / (t[:, None] * s_lo)).sum()))


def error_bound(profile: PrProfile, lipschitz: float) -> np.ndarray:
    """Per-weight bound on the gap between weights computed from any
    slope-capped concave utility and from its rank-grid interpolant.

    Needs at least two rank positions; the bound scales with R z / (t s_lo).
    """
    profile.validate()
    r = profile.n_ranks
    if r < 2:
        raise BoundUndefinedError("bound involves division by R - 1")
    z = disparity_invariant(profile)
    t = profile.expert_ranks.astype(float)
    s_lo = profile.worst_case_attribute_ranks.astype(float)
    points = np.arange(r, 0, -1, dtype=float)
    out = np.empty((profile.n_experts, profile.n_attributes, r))
    for i in range(profile.n_experts):
        for j in range(profile.n_attributes):
            vals = profile.utilities[i][j].value(points)
            total = float(vals.sum())
            if total <= 1e-12:
                raise ZeroUtilitySumError("degenerate utility in error bound")
            lead = r * z / (t[i] * s_lo[i, j])
            out[i, j] = lead * (2.0 * (lipschitz + vals) / (r - 1.0) - vals / total)
    return out


@dataclass
class PrInstance:
    """Full two-stage input: rankings plus one ambiguity spec per pair."""

    expert_ranks: np.ndarray
    attribute_rank_intervals: np.ndarray
    alternative_ranks: np.ndarray
    lipschitz: float
    ambiguity_specs: list[list[UtilityAmbiguitySpec | None]] | None = None
    scenarios: ScenarioSet | None = None

    def __post_init__(self):
        self.expert_ranks = np.asarray(self.expert_ranks, dtype=int)
        self.attribute_rank_intervals = np.asarray(self.attribute_rank_intervals, dtype=int)
        self.alternative_ranks = np.asarray(self.alternative_ranks, dtype=int)

    @property
    def n_ranks(self) -> int:
        return self.alternative_ranks.shape[2]

    def ranking_profile(self) -> RankingProfile:
        return RankingProfile(
            self.expert_ranks,
            self.attribute_rank_intervals[:, :, 0],
            self.alternative_ranks,
        )

    def spec_for(self, i: int, j: int) -> UtilityAmbiguitySpec:
        if self.ambiguity_specs is not None and self.ambiguity_specs[i][j] is not None:
            return self.ambiguity_specs[i][j]
        return UtilityAmbiguitySpec.on_ranks(self.n_ranks, self.lipschitz)


@dataclass
class PrResult:
    stage1: list[list[Stage1Result]]
    profile: PrProfile
    table: NormalizedUtilityTable
    solution: WeightSolution
    groups: GroupWeights


def solve_opa_pr(instance: PrInstance, cross_check: bool = False) -> PrResult:
    """Stage 1 per expert/attribute pair, then the closed-form stage 2.

    With ``cross_check`` the stage-2 LP is solved as well and must agree with
    the closed form to 1e-8.
    """
    base = instance.ranking_profile()
    base.validate()
    i, j = base.n_experts, base.n_attributes
    scenarios = instance.scenarios
    stage1: list[list[Stage1Result]] = []
    utilities: list[list[PiecewiseLinearUtility]] = []
    for a in range(i):
        row_res, row_u = [], []
        for b in range(j):
            try:
                res = solve_worst_case_utility(instance.spec_for(a, b), scenarios)
            except AmbiguitySetEmptyError as exc:
                raise AmbiguitySetEmptyError(
                    f"expert {a}, attribute {b}: {exc}"
                ) from exc
            row_res.append(res)
            row_u.append(res.utility)
        stage1.append(row_res)
        utilities.append(row_u)

    profile = PrProfile(
        instance.expert_ranks,
        instance.attribute_rank_intervals,
        utilities,
        instance.n_ranks,
    )
    table = normalize_utilities(profile)
    rank_map = base.rank_to_alternative()
    solution = solve_stage2_closed_form(profile, table, rank_map)
    if cross_check:
        via_lp = solve_stage2_lp(profile, table, rank_map)
        if abs(via_lp.z - solution.z) > 1e-8 or np.max(np.abs(via_lp.weights - solution.weights)) > 1e-8:
            raise SolverError("closed form and LP disagree beyond 1e-8")
    groups = aggregate_weights(solution)
    return PrResult(stage1, profile, table, solution, groups)
