"""Classical ordinal priority weights: LP construction, closed form,
surrogate-weight factorization, and aggregation."""

from __future__ import annotations

import numpy as np

from . import lp
from .errors import InvalidArgumentError, SolverError
from .profiles import GroupWeights, RankingProfile, WeightSolution

ROC = "roc"
RR = "rr"


def harmonic_tail(n: int) -> np.ndarray:
    """tail[r-1] = 1/r + 1/(r+1) + ... + 1/n, accumulated backward."""
    tail = np.zeros(n)
    acc = 0.0
    for h in range(n, 0, -1):
        acc += 1.0 / h
        tail[h - 1] = acc
    return tail


def surrogate_weights(n: int, kind: str) -> np.ndarray:
    """Rank order centroid or rank reciprocal weights for n ranked objects."""
    if n < 1:
        raise InvalidArgumentError("need at least one ranked object")
    if kind == ROC:
        return harmonic_tail(n) / n
    if kind == RR:
        total = harmonic_tail(n)[0]
        return 1.0 / (np.arange(1, n + 1) * total)
    raise InvalidArgumentError(f"unknown surrogate weight kind {kind!r}")


def build_opa_lp(profile: RankingProfile) -> lp.LinearProgram:
    """Cumulative-sum form of the disparity LP.

    Variables are [z, w_111, ..., w_IJR] with w flattened in C order over
    (expert, attribute, rank position).  Raw consecutive-difference
    constraints are equivalent to this form because they are all active at
    optimality, so only the cumulative rows are emitted.
    """
    profile.validate()
    i, j, _ = profile.alternative_ranks.shape
    r = profile.n_alternatives
    tail = harmonic_tail(r)
    nvars = 1 + i * j * r
    constraints = []
    for a in range(i):
        for b in range(j):
            scale = float(profile.expert_ranks[a] * profile.attribute_ranks[a, b])
            for p in range(r):
                row = np.zeros(nvars)
                row[0] = tail[p]
                row[1 + (a * j + b) * r + p] = -scale
                constraints.append(lp.Constraint(row, lp.LESS_EQUAL, 0.0))
    norm = np.zeros(nvars)
    norm[1:] = 1.0
    constraints.append(lp.Constraint(norm, lp.EQUAL, 1.0))
    objective = np.zeros(nvars)
    objective[0] = 1.0
    return lp.LinearProgram(lp.MAX, objective, constraints)


def solve_opa_lp(profile: RankingProfile) -> WeightSolution:
    solution = lp.solve_lp(build_opa_lp(profile))
    if solution.status != lp.OPTIMAL:
        raise SolverError(f"disparity LP ended {solution.status}")
    i, j = profile.attribute_ranks.shape
    r = profile.n_alternatives
    weights = solution.variable_values[1:].reshape(i, j, r)
    return WeightSolution(float(solution.variable_values[0]), weights, profile.rank_to_alternative())


def solve_opa_closed_form(profile: RankingProfile) -> WeightSolution:
    """Closed-form optimum of the disparity LP.

    Every inequality is active at the optimum, which pins
    w_ijr = tail(r) * z / (t_i * s_ij); normalization then fixes
    z = 1 / (R * sum_ij 1/(t_i s_ij)).  When expert and attribute ranks are
    permutations the denominator factorizes into the familiar
    R * (sum_p 1/p) * (sum_q 1/q) product.
    """
    profile.validate()
    t = profile.expert_ranks.astype(float)
    s = profile.attribute_ranks.astype(float)
    r = profile.n_alternatives
    tail = harmonic_tail(r)
    inv_ts = 1.0 / (t[:, None] * s)
    z = 1.0 / (r * inv_ts.sum())
    weights = inv_ts[:, :, None] * tail[None, None, :] * z
    return WeightSolution(float(z), weights, profile.rank_to_alternative())


def factorized_weights(profile: RankingProfile) -> WeightSolution:
    """Weights as the product of two rank-reciprocal factors and one
    rank-order-centroid factor, indexed by the given ranks."""
    profile.validate()
    i, j = profile.attribute_ranks.shape
    r = profile.n_alternatives
    rr_experts = surrogate_weights(i, RR)
    rr_attributes = surrogate_weights(j, RR)
    roc = surrogate_weights(r, ROC)
    weights = (
        rr_experts[profile.expert_ranks - 1][:, None, None]
        * rr_attributes[profile.attribute_ranks - 1][:, :, None]
        * roc[None, None, :]
    )
    z = 1.0 / (r * (1.0 / (profile.expert_ranks[:, None] * profile.attribute_ranks)).sum())
    return WeightSolution(float(z), weights, profile.rank_to_alternative())


def aggregate_weights(solution: WeightSolution) -> GroupWeights:
    """Marginal expert/attribute/alternative weights of one solution."""
    w = solution.weights
    experts = w.sum(axis=(1, 2))
    attributes = w.sum(axis=(0, 2))
    alternatives = np.zeros(w.shape[2])
    np.add.at(alternatives, solution.rank_to_alternative.ravel(), w.ravel())
    return GroupWeights(experts, attributes, alternatives)
