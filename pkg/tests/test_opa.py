"""Classical weight elicitation: closed form vs LP, factorization, aggregation."""

import random

import numpy as np
import pytest

from opaw import lp, opa
from opaw.errors import InvalidArgumentError, InvalidProfileError
from opaw.profiles import RankingProfile

from conftest import random_profile


def tiny(ranks):
    return RankingProfile([1], [[1]], [[list(ranks)]])


def test_lp_structure_two_ranks():
    problem = opa.build_opa_lp(tiny([1, 2]))
    assert problem.n == 3
    assert len(problem.constraints) == 3
    relations = [c.relation for c in problem.constraints]
    assert relations.count(lp.LESS_EQUAL) == 2
    assert relations.count(lp.EQUAL) == 1
    assert lp.solve_lp(problem).objective_value == pytest.approx(0.5, abs=1e-9)


def test_single_cell_profile():
    sol = opa.solve_opa_closed_form(RankingProfile([1], [[1]], [[[1]]]))
    assert sol.z == pytest.approx(1.0, abs=1e-12)
    assert sol.weights.ravel().tolist() == pytest.approx([1.0], abs=1e-12)


def test_three_rank_closed_form_and_lp():
    profile = tiny([1, 2, 3])
    closed = opa.solve_opa_closed_form(profile)
    assert closed.z == pytest.approx(1 / 3, abs=1e-12)
    assert closed.weights.ravel() == pytest.approx([11 / 18, 5 / 18, 1 / 9], abs=1e-12)
    via_lp = opa.solve_opa_lp(profile)
    assert via_lp.z == pytest.approx(closed.z, abs=1e-8)
    assert np.max(np.abs(via_lp.weights - closed.weights)) <= 1e-8


def test_two_expert_example():
    profile = RankingProfile([1, 2], [[1], [1]], [[[1, 2]], [[1, 2]]])
    closed = opa.solve_opa_closed_form(profile)
    assert closed.z == pytest.approx(1 / 3, abs=1e-12)
    assert closed.weights.ravel() == pytest.approx([1 / 2, 1 / 6, 1 / 4, 1 / 12], abs=1e-12)
    assert opa.solve_opa_lp(profile).z == pytest.approx(1 / 3, abs=1e-8)
    groups = opa.aggregate_weights(closed)
    assert groups.experts == pytest.approx([2 / 3, 1 / 3], abs=1e-12)
    assert groups.experts == pytest.approx(opa.surrogate_weights(2, opa.RR), abs=1e-12)


def test_aggregate_examples():
    sol = opa.solve_opa_closed_form(RankingProfile([1], [[1]], [[[1]]]))
    groups = opa.aggregate_weights(sol)
    for vec in (groups.experts, groups.attributes, groups.alternatives):
        assert vec == pytest.approx([1.0], abs=1e-12)

    profile = RankingProfile([1], [[1, 2]], [[[1], [1]]])
    groups = opa.aggregate_weights(opa.solve_opa_closed_form(profile))
    assert groups.attributes == pytest.approx([2 / 3, 1 / 3], abs=1e-12)


def test_alternative_routing():
    # expert ranks alternative C best, A worst: ranks (3, 2, 1)
    profile = RankingProfile([1], [[1]], [[[3, 2, 1]]])
    sol = opa.solve_opa_closed_form(profile)
    groups = opa.aggregate_weights(sol)
    # weight of rank position 1 belongs to alternative C (index 2)
    assert groups.alternatives[2] == pytest.approx(11 / 18, abs=1e-12)
    assert groups.alternatives[0] == pytest.approx(1 / 9, abs=1e-12)
    by_alt = sol.weights_by_alternative()
    assert by_alt[0, 0] == pytest.approx([1 / 9, 5 / 18, 11 / 18], abs=1e-12)


def test_surrogate_weights():
    assert opa.surrogate_weights(3, opa.ROC) == pytest.approx([11 / 18, 5 / 18, 2 / 18], abs=1e-12)
    assert opa.surrogate_weights(1, opa.ROC) == pytest.approx([1.0])
    assert opa.surrogate_weights(1, opa.RR) == pytest.approx([1.0])
    assert opa.surrogate_weights(2, opa.RR) == pytest.approx([2 / 3, 1 / 3], abs=1e-12)
    with pytest.raises(InvalidArgumentError):
        opa.surrogate_weights(0, opa.ROC)
    with pytest.raises(InvalidArgumentError):
        opa.surrogate_weights(3, "rank_sum")


def test_factorized_examples():
    assert opa.factorized_weights(tiny([1, 2, 3])).weights.ravel() == pytest.approx(
        [11 / 18, 5 / 18, 1 / 9], abs=1e-12
    )
    profile = RankingProfile([1, 2], [[1], [1]], [[[1]], [[1]]])
    assert opa.factorized_weights(profile).weights.ravel() == pytest.approx(
        [2 / 3, 1 / 3], abs=1e-12
    )
    single = RankingProfile([1], [[1]], [[[1]]])
    assert opa.factorized_weights(single).weights.ravel() == pytest.approx([1.0])


def test_invalid_profiles():
    with pytest.raises(InvalidProfileError):
        RankingProfile([1], [[1]], [[[1, 1]]]).validate()  # tied alternatives
    with pytest.raises(InvalidProfileError):
        RankingProfile([3], [[1]], [[[1]]]).validate()  # expert rank out of range
    with pytest.raises(InvalidProfileError):
        RankingProfile([1], [[5]], [[[1]]]).validate()  # attribute rank out of range


def test_permutation_profiles_match_product_formula(rng):
    for _ in range(20):
        profile = random_profile(rng, permutations=True)
        closed = opa.solve_opa_closed_form(profile)
        i, j = profile.n_experts, profile.n_attributes
        r = profile.n_alternatives
        h_i = sum(1.0 / p for p in range(1, i + 1))
        h_j = sum(1.0 / q for q in range(1, j + 1))
        assert closed.z == pytest.approx(1.0 / (r * h_i * h_j), abs=1e-12)
        factorized = opa.factorized_weights(profile)
        assert np.max(np.abs(factorized.weights - closed.weights)) <= 1e-12
        assert abs(factorized.z - closed.z) <= 1e-12


def test_closed_form_matches_lp_with_repeated_ranks(rng):
    for _ in range(20):
        profile = random_profile(rng, permutations=False)
        closed = opa.solve_opa_closed_form(profile)
        via_lp = opa.solve_opa_lp(profile)
        assert abs(closed.z - via_lp.z) <= 1e-8
        assert np.max(np.abs(closed.weights - via_lp.weights)) <= 1e-8
        closed.validate(tol=1e-9)


def test_all_constraints_tight_at_closed_form(rng):
    for _ in range(10):
        profile = random_profile(rng)
        closed = opa.solve_opa_closed_form(profile)
        tail = opa.harmonic_tail(profile.n_alternatives)
        t = profile.expert_ranks
        s = profile.attribute_ranks
        for a in range(profile.n_experts):
            for b in range(profile.n_attributes):
                residual = tail * closed.z - t[a] * s[a, b] * closed.weights[a, b]
                assert np.max(np.abs(residual)) <= 1e-9


def test_decomposability(rng):
    for _ in range(8):
        profile = random_profile(rng, max_dim=4)
        joint = opa.solve_opa_lp(profile)
        groups = opa.aggregate_weights(joint)
        for a in range(profile.n_experts):
            single = RankingProfile(
                [1],
                profile.attribute_ranks[a : a + 1],
                profile.alternative_ranks[a : a + 1],
            )
            part = opa.solve_opa_lp(single)
            rebuilt = groups.experts[a] * part.weights[0]
            assert np.max(np.abs(rebuilt - joint.weights[a])) <= 1e-8


def test_weight_solution_validation():
    sol = opa.solve_opa_closed_form(tiny([1, 2, 3]))
    sol.validate(tol=1e-9)
    groups = opa.aggregate_weights(sol)
    groups.validate(tol=1e-9)
