"""Shared generators for randomized property tests."""

import random

import numpy as np
import pytest

from opaw.opa_pr import PrProfile, normalize_utilities
from opaw.profiles import RankingProfile
from opaw.utility import (
    MomentConstraint,
    PiecewiseLinearUtility,
    ScenarioSet,
    StepFunction,
    UtilityAmbiguitySpec,
    integrate_step_against_pl,
)


def random_profile(rng: random.Random, max_dim: int = 5, permutations: bool = True) -> RankingProfile:
    i = rng.randint(1, max_dim)
    j = rng.randint(1, max_dim)
    k = rng.randint(1, max_dim)
    if permutations:
        t = rng.sample(range(1, i + 1), i)
        s = [rng.sample(range(1, j + 1), j) for _ in range(i)]
    else:
        t = [rng.randint(1, i) for _ in range(i)]
        s = [[rng.randint(1, j) for _ in range(j)] for _ in range(i)]
    r = [[rng.sample(range(1, k + 1), k) for _ in range(j)] for _ in range(i)]
    return RankingProfile(t, s, r)


def random_concave_values(rng: random.Random, grid: np.ndarray) -> np.ndarray:
    """Normalized concave nondecreasing samples on the given grid."""
    n_seg = len(grid) - 1
    raw = sorted((rng.random() + 1e-3 for _ in range(n_seg)), reverse=True)
    gaps = np.diff(grid)
    total = float(np.dot(raw, gaps))
    slopes = np.array(raw) / total
    values = np.concatenate([[0.0], np.cumsum(slopes * gaps)])
    values[-1] = 1.0
    return values


def random_concave_utility(rng: random.Random, grid) -> PiecewiseLinearUtility:
    grid = np.asarray(grid, dtype=float)
    return PiecewiseLinearUtility(grid, random_concave_values(rng, grid))


def random_step_on_grid(rng: random.Random, grid: np.ndarray) -> StepFunction:
    """Step function jumping only at interior grid points."""
    interior = list(grid[1:-1])
    points = sorted(rng.sample(interior, rng.randint(0, len(interior)))) if interior else []
    levels = [round(rng.uniform(-2, 2), 3) for _ in range(len(points) + 1)]
    return StepFunction(float(grid[-1]), points, levels)


def random_feasible_spec(
    rng: random.Random, n_ranks: int, lipschitz: float, n_constraints: int
) -> tuple[UtilityAmbiguitySpec, PiecewiseLinearUtility]:
    """Spec plus one utility that witnesses feasibility.

    Constraints are anchored on a randomly drawn concave utility whose slopes
    stay strictly under the cap, so the returned set is never empty.
    """
    grid = np.arange(n_ranks + 1, dtype=float)
    while True:
        witness = random_concave_utility(rng, grid)
        if witness.slopes.max() <= lipschitz * 0.95:
            break
    constraints = []
    for _ in range(n_constraints):
        psi = random_step_on_grid(rng, grid)
        anchored = integrate_step_against_pl(psi, witness)
        constraints.append(MomentConstraint(psi, anchored + rng.uniform(0.0, 0.2)))
    return UtilityAmbiguitySpec(grid, lipschitz, constraints), witness


def random_pr_profile(rng: random.Random, max_dim: int = 4, max_ranks: int = 5) -> PrProfile:
    i = rng.randint(1, max_dim)
    j = rng.randint(1, max_dim)
    n_ranks = rng.randint(1, max_ranks)
    t = rng.sample(range(1, i + 1), i)
    intervals = []
    for _ in range(i):
        row = []
        for _ in range(j):
            lo = rng.randint(1, j)
            hi = rng.randint(lo, j)
            row.append([lo, hi])
        intervals.append(row)
    grid = np.arange(n_ranks + 1, dtype=float)
    utilities = [
        [random_concave_utility(rng, grid) for _ in range(j)] for _ in range(i)
    ]
    return PrProfile(t, intervals, utilities, n_ranks)


def random_scenarios(rng: random.Random, n_ranks: int) -> ScenarioSet:
    n = rng.randint(1, 4)
    outcomes = [rng.uniform(0, n_ranks) for _ in range(n)]
    raw = [rng.random() + 1e-6 for _ in range(n)]
    total = sum(raw)
    return ScenarioSet(outcomes, [p / total for p in raw])


@pytest.fixture
def rng():
    return random.Random(20240817)


def table_for(profile: PrProfile):
    return normalize_utilities(profile)
