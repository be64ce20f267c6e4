"""Ranking profiles and weight containers for ordinal priority problems."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidProfileError


@dataclass
class RankingProfile:
    """One group decision instance given purely as ordinal ranks.

    expert_ranks[i] is the rank the decision maker gave expert i (1 = most
    important), attribute_ranks[i, j] the rank expert i gave attribute j, and
    alternative_ranks[i, j, k] the rank expert i gave alternative k under
    attribute j.  Alternative ranks must be strict (a bijection onto 1..K per
    expert/attribute pair); expert and attribute ranks only need to stay in
    range, repeats are accepted.
    """

    expert_ranks: np.ndarray
    attribute_ranks: np.ndarray
    alternative_ranks: np.ndarray

    def __post_init__(self):
        self.expert_ranks = np.asarray(self.expert_ranks, dtype=int)
        self.attribute_ranks = np.asarray(self.attribute_ranks, dtype=int)
        self.alternative_ranks = np.asarray(self.alternative_ranks, dtype=int)

    @property
    def n_experts(self) -> int:
        return self.expert_ranks.shape[0]

    @property
    def n_attributes(self) -> int:
        return self.attribute_ranks.shape[1] if self.attribute_ranks.ndim == 2 else 0

    @property
    def n_alternatives(self) -> int:
        return self.alternative_ranks.shape[2] if self.alternative_ranks.ndim == 3 else 0

    def validate(self):
        i, j, k = self.n_experts, self.n_attributes, self.n_alternatives
        if i == 0 or self.attribute_ranks.shape != (i, j) or j == 0:
            raise InvalidProfileError("attribute_ranks must be a nonempty (experts x attributes) array")
        if self.alternative_ranks.shape != (i, j, k) or k == 0:
            raise InvalidProfileError(
                "alternative_ranks must be a nonempty (experts x attributes x alternatives) array"
            )
        if self.expert_ranks.min() < 1 or self.expert_ranks.max() > i:
            raise InvalidProfileError(f"expert ranks must lie in 1..{i}")
        if self.attribute_ranks.min() < 1 or self.attribute_ranks.max() > j:
            raise InvalidProfileError(f"attribute ranks must lie in 1..{j}")
        expected = np.arange(1, k + 1)
        for a in range(i):
            for b in range(j):
                row = np.sort(self.alternative_ranks[a, b])
                if not np.array_equal(row, expected):
                    raise InvalidProfileError(
                        f"alternative ranks of expert {a}, attribute {b} are not a "
                        f"strict ranking of 1..{k} (ties are rejected)"
                    )

    def rank_to_alternative(self) -> np.ndarray:
        """Inverse permutations: entry [i, j, r-1] is the alternative ranked r."""
        inv = np.empty_like(self.alternative_ranks)
        i, j, k = self.alternative_ranks.shape
        for a in range(i):
            for b in range(j):
                inv[a, b, self.alternative_ranks[a, b] - 1] = np.arange(k)
        return inv


@dataclass
class WeightSolution:
    """Optimal disparity and the weight tensor indexed by rank position.

    ``weights[i, j, r-1]`` is the weight of the alternative that expert i
    ranked r under attribute j; ``rank_to_alternative`` routes the position
    back to the alternative index.
    """

    z: float
    weights: np.ndarray
    rank_to_alternative: np.ndarray

    def weights_by_alternative(self) -> np.ndarray:
        out = np.empty_like(self.weights)
        i, j, r = self.weights.shape
        for a in range(i):
            for b in range(j):
                out[a, b, self.rank_to_alternative[a, b]] = self.weights[a, b]
        return out

    def validate(self, tol: float = 1e-9):
        if abs(self.weights.sum() - 1.0) > tol:
            raise InvalidProfileError("weights must sum to one")
        if self.weights.min() < -tol:
            raise InvalidProfileError("weights must be nonnegative")
        if np.any(np.diff(self.weights, axis=2) > tol):
            raise InvalidProfileError("weights must decrease along rank positions")


@dataclass
class GroupWeights:
    experts: np.ndarray
    attributes: np.ndarray
    alternatives: np.ndarray

    def validate(self, tol: float = 1e-9):
        for name, vec in (
            ("experts", self.experts),
            ("attributes", self.attributes),
            ("alternatives", self.alternatives),
        ):
            if abs(vec.sum() - 1.0) > tol or vec.min() < -tol:
                raise InvalidProfileError(f"{name} weights are not a simplex vector")


@dataclass
class PrsResult:
    """Robust satisficing outcome: per-expert violation rates and weights."""

    eta: np.ndarray
    epsilon_upper: np.ndarray
    epsilon_lower: np.ndarray
    solution: WeightSolution
    groups: GroupWeights
    z_target: float
    alpha: float
    total_fragility: float = field(init=False)
    fragility_phi: float = field(init=False)

    def __post_init__(self):
        self.total_fragility = float(self.eta.sum())
        self.fragility_phi = -self.total_fragility
