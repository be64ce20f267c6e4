"""Inconsistency-tolerant solves: slack budgets, rank perturbation, and the
discard-budget mixed program against enumeration."""

import itertools
import random

import numpy as np
import pytest

from opaw import lp
from opaw.errors import (
    InfeasibleProblemError,
    InvalidArgumentError,
    PerturbedRankOutOfDomainError,
    ZeroUtilitySumError,
)
from opaw.inconsistency import (
    default_disparity_budget,
    solve_with_disparity_budget,
    solve_with_erroneous_elicitation,
    solve_with_rank_perturbation,
)
from opaw.opa_pr import (
    NormalizedUtilityTable,
    PrProfile,
    disparity_invariant,
    normalize_utilities,
    solve_stage2_closed_form,
    solve_stage2_lp,
)
from opaw.utility import PiecewiseLinearUtility

from conftest import random_pr_profile


def linear_profile(n_ranks, expert_ranks=(1,), intervals=None):
    i = len(expert_ranks)
    if intervals is None:
        intervals = [[[1, 1]]] * i
    grid = np.arange(n_ranks + 1, dtype=float)
    utilities = [[PiecewiseLinearUtility.chord(grid) for _ in row] for row in intervals]
    return PrProfile(list(expert_ranks), intervals, utilities, n_ranks)


class TestDisparityBudget:
    def test_zero_budget_bit_matches_stage_two(self):
        profile = linear_profile(3)
        table = normalize_utilities(profile)
        relaxed, slack = solve_with_disparity_budget(profile, table, 0.0)
        reference = solve_stage2_lp(profile, table)
        assert relaxed.z == reference.z
        assert np.array_equal(relaxed.weights, reference.weights)
        assert np.all(slack == 0.0)

    def test_single_cell_toy(self):
        profile = linear_profile(1)
        table = normalize_utilities(profile)
        relaxed, slack = solve_with_disparity_budget(profile, table, 0.5)
        assert relaxed.z == pytest.approx(1.5, abs=1e-9)
        assert slack.sum() == pytest.approx(0.5, abs=1e-9)

    def test_budget_sweep_monotone_and_concave(self, rng):
        profile = random_pr_profile(rng, max_dim=3, max_ranks=3)
        table = normalize_utilities(profile)
        budgets = [0.0, 0.1, 0.2, 1.0, 10.0]
        values = [solve_with_disparity_budget(profile, table, g)[0].z for g in budgets]
        for lo, hi in zip(values, values[1:]):
            assert hi >= lo - 1e-9
        mid, _ = solve_with_disparity_budget(profile, table, 0.15)
        assert mid.z >= 0.5 * (values[1] + values[2]) - 1e-9

    def test_default_budget_helper(self):
        profile = linear_profile(2)
        assert default_disparity_budget(profile) == pytest.approx(
            0.1 * disparity_invariant(profile), abs=1e-12
        )

    def test_negative_budget_rejected(self):
        profile = linear_profile(2)
        with pytest.raises(InvalidArgumentError):
            solve_with_disparity_budget(profile, normalize_utilities(profile), -1.0)


class TestRankPerturbation:
    def test_zero_shift_bit_matches(self):
        profile = linear_profile(2)
        reference = solve_stage2_closed_form(profile, normalize_utilities(profile))
        shifted = solve_with_rank_perturbation(profile, np.zeros((1, 1, 2)))
        assert shifted.z == reference.z
        assert np.array_equal(shifted.weights, reference.weights)

    def test_uniform_half_shift(self):
        profile = linear_profile(2)
        shifted = solve_with_rank_perturbation(profile, np.full((1, 1, 2), 0.5))
        # rank r reads the utility at R+1-(r+0.5): u(1.5) = .75, u(0.5) = .25
        assert shifted.weights.ravel() == pytest.approx([0.75, 0.25], abs=1e-12)
        assert shifted.z == pytest.approx(0.5, abs=1e-12)

    def test_out_of_domain_shift(self):
        profile = linear_profile(2)
        shifts = np.zeros((1, 1, 2))
        shifts[0, 0, 0] = -0.5  # rank 1 -> evaluation point 2.5 beyond the grid
        with pytest.raises(PerturbedRankOutOfDomainError):
            solve_with_rank_perturbation(profile, shifts)

    def test_shift_magnitude_guard(self):
        profile = linear_profile(2)
        with pytest.raises(InvalidArgumentError):
            solve_with_rank_perturbation(profile, np.full((1, 1, 2), 1.0))

    def test_degenerate_utility_guard(self):
        grid = np.arange(3.0)
        dead = PiecewiseLinearUtility(grid, np.zeros(3))
        profile = PrProfile([1], [[[1, 1]]], [[dead]], 2)
        with pytest.raises(ZeroUtilitySumError):
            solve_with_rank_perturbation(profile, np.zeros((1, 1, 2)))


class TestErroneousElicitation:
    def test_zero_fractions_keep_all_relations(self):
        profile = linear_profile(3)
        table = normalize_utilities(profile)
        reference = solve_stage2_closed_form(profile, table)
        solution, flags = solve_with_erroneous_elicitation(
            profile, table, z_target=reference.z - 1e-6, error_fractions=np.zeros((1, 1))
        )
        assert not flags.any()
        assert solution.z == pytest.approx(reference.z, abs=1e-9)

    def test_single_corrupted_relation_is_discarded(self):
        profile = linear_profile(3)
        # corrupt rank 1: an absurdly large utility share strangles z unless
        # that relation is dropped
        table = NormalizedUtilityTable(np.array([[[0.9, 0.05, 0.05]]]) * np.ones((1, 1, 1)))
        solution, flags = solve_with_erroneous_elicitation(
            profile, table, z_target=0.0, error_fractions=np.full((1, 1), 1.0 / 3.0)
        )
        assert flags[0, 0].tolist() == [True, False, False]

        # oracle: enumerate every single-discard subset explicitly
        best = -np.inf
        best_subset = None
        for subset in itertools.chain([()], itertools.combinations(range(3), 1)):
            cons = []
            for p in range(3):
                if p in subset:
                    continue
                row = np.zeros(4)
                row[0] = 3 * table.values[0, 0, p]
                row[1 + p] = -1.0
                cons.append(lp.Constraint(row, lp.LESS_EQUAL, 0.0))
            norm = np.zeros(4)
            norm[1:] = 1.0
            cons.append(lp.Constraint(norm, lp.EQUAL, 1.0))
            objective = np.zeros(4)
            objective[0] = 1.0
            sol = lp.solve_lp(lp.LinearProgram(lp.MAX, objective, cons))
            if sol.status == lp.OPTIMAL and sol.objective_value > best:
                best = sol.objective_value
                best_subset = subset
        assert best_subset == (0,)
        assert solution.z == pytest.approx(best, abs=1e-7)

    def test_unreachable_target_is_infeasible(self):
        profile = linear_profile(3)
        table = normalize_utilities(profile)
        relaxed, _ = solve_with_erroneous_elicitation(
            profile, table, z_target=0.0, error_fractions=np.full((1, 1), 1.0 / 3.0)
        )
        with pytest.raises(InfeasibleProblemError):
            solve_with_erroneous_elicitation(
                profile,
                table,
                z_target=relaxed.z + 0.5,
                error_fractions=np.full((1, 1), 1.0 / 3.0),
            )

    def test_matches_enumeration_on_random_instances(self, rng):
        for _ in range(10):
            profile = random_pr_profile(rng, max_dim=2, max_ranks=3)
            i, j, r = profile.n_experts, profile.n_attributes, profile.n_ranks
            if i * j * r > 6:
                continue
            table = normalize_utilities(profile)
            fractions = np.full((i, j), rng.choice([0.0, 1.0 / r, 2.0 / r]))
            # keep the first pair fully enforced so the optimum stays bounded
            fractions[0, 0] = 0.0
            solution, flags = solve_with_erroneous_elicitation(
                profile, table, z_target=0.0, error_fractions=fractions
            )
            t = profile.expert_ranks.astype(float)
            s_lo = profile.worst_case_attribute_ranks.astype(float)
            best = -np.inf
            budget = {(a, b): int(np.floor(fractions[a, b] * r + 1e-9)) for a in range(i) for b in range(j)}
            cells = [(a, b, p) for a in range(i) for b in range(j) for p in range(r)]
            for mask in range(2 ** len(cells)):
                chosen = [cells[idx] for idx in range(len(cells)) if (mask >> idx) & 1]
                counts = {}
                for a, b, _ in chosen:
                    counts[(a, b)] = counts.get((a, b), 0) + 1
                if any(counts.get(key, 0) > budget[key] for key in budget):
                    continue
                cons = []
                nvars = 1 + i * j * r
                for a, b, p in cells:
                    if (a, b, p) in chosen:
                        continue
                    row = np.zeros(nvars)
                    row[0] = r * table.values[a, b, p]
                    row[1 + (a * j + b) * r + p] = -t[a] * s_lo[a, b]
                    cons.append(lp.Constraint(row, lp.LESS_EQUAL, 0.0))
                norm = np.zeros(nvars)
                norm[1:] = 1.0
                cons.append(lp.Constraint(norm, lp.EQUAL, 1.0))
                objective = np.zeros(nvars)
                objective[0] = 1.0
                sub = lp.solve_lp(lp.LinearProgram(lp.MAX, objective, cons))
                if sub.status == lp.OPTIMAL:
                    best = max(best, sub.objective_value)
            assert solution.z == pytest.approx(best, abs=1e-7)

    def test_budget_respected(self, rng):
        profile = random_pr_profile(rng, max_dim=2, max_ranks=3)
        i, j, r = profile.n_experts, profile.n_attributes, profile.n_ranks
        table = normalize_utilities(profile)
        fractions = np.full((i, j), 1.0 / r)
        _, flags = solve_with_erroneous_elicitation(
            profile, table, z_target=0.0, error_fractions=fractions
        )
        assert np.all(flags.sum(axis=2) <= np.floor(fractions * r + 1e-9))

    def test_bad_fraction_shape(self):
        profile = linear_profile(2)
        with pytest.raises(InvalidArgumentError):
            solve_with_erroneous_elicitation(
                profile, normalize_utilities(profile), 0.0, np.zeros((2, 2))
            )
        with pytest.raises(InvalidArgumentError):
            solve_with_erroneous_elicitation(
                profile, normalize_utilities(profile), 0.0, np.full((1, 1), 1.5)
            )
