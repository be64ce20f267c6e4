"""Benchmark rankers (TOPSIS, VIKOR, MOORA), rank correlation, and the
expert-permutation sensitivity harness with descriptive statistics."""

from __future__ import annotations

import itertools
import math
import random
import warnings
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InvalidArgumentError, NormalizationError
from .opa_pr import NormalizedUtilityTable, PrProfile, solve_stage2_closed_form
from .opa import aggregate_weights


@dataclass
class DecisionMatrix:
    """Benefit-type scores, attributes in rows and alternatives in columns."""

    values: np.ndarray
    weights: np.ndarray | None = None
    attributes: list[str] | None = None
    alternatives: list[str] | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.weights is None:
            self.weights = np.full(self.values.shape[0], 1.0 / self.values.shape[0])
        else:
            self.weights = np.asarray(self.weights, dtype=float)
        if self.attributes is None:
            self.attributes = [f"C{i+1}" for i in range(self.values.shape[0])]
        if self.alternatives is None:
            self.alternatives = [f"A{k+1}" for k in range(self.values.shape[1])]

    def validate(self):
        if self.values.ndim != 2 or self.values.size == 0:
            raise InvalidArgumentError("matrix must be 2-d and nonempty")
        if np.any(self.values < 0):
            raise InvalidArgumentError("scores must be nonnegative")
        if self.weights.shape != (self.values.shape[0],):
            raise InvalidArgumentError("one weight per attribute required")
        if abs(self.weights.sum() - 1.0) > 1e-9 or self.weights.min() < 0:
            raise InvalidArgumentError("attribute weights must form a simplex vector")


@dataclass
class BenchmarkRanking:
    method: str
    scores: np.ndarray
    ranks: np.ndarray
    tied: bool
    notes: dict = field(default_factory=dict)


def dense_ranks(scores: np.ndarray, higher_better: bool = True) -> np.ndarray:
    """1 = best; equal scores share a rank and the next rank follows densely."""
    uniq = np.unique(scores)
    if higher_better:
        return np.array([1 + int(np.sum(uniq > s)) for s in scores])
    return np.array([1 + int(np.sum(uniq < s)) for s in scores])


def _vector_normalized(matrix: DecisionMatrix) -> np.ndarray:
    norms = np.sqrt((matrix.values**2).sum(axis=1))
    if np.any(norms <= 0):
        raise NormalizationError("an attribute row has zero norm")
    return matrix.values / norms[:, None]


def topsis(matrix: DecisionMatrix) -> BenchmarkRanking:
    """Vector normalization, weighted Euclidean distances to the ideal and
    anti-ideal columns, closeness ratio ranked descending."""
    matrix.validate()
    weighted = _vector_normalized(matrix) * matrix.weights[:, None]
    ideal = weighted.max(axis=1)
    anti = weighted.min(axis=1)
    d_plus = np.sqrt(((weighted - ideal[:, None]) ** 2).sum(axis=0))
    d_minus = np.sqrt(((weighted - anti[:, None]) ** 2).sum(axis=0))
    # zero denominator only happens when every column is identical; any
    # shared constant keeps them tied
    span = d_plus + d_minus
    closeness = np.where(span > 0, d_minus / np.where(span > 0, span, 1.0), 0.5)
    ranks = dense_ranks(closeness, higher_better=True)
    return BenchmarkRanking(
        "topsis", closeness, ranks, tied=len(np.unique(closeness)) < closeness.size
    )


def vikor(matrix: DecisionMatrix, v: float = 0.5) -> BenchmarkRanking:
    """Group utility S, individual regret R, and the compromise index Q with
    coefficient v; Q ascending.  Attributes with no spread are skipped."""
    matrix.validate()
    best = matrix.values.max(axis=1)
    worst = matrix.values.min(axis=1)
    spread = best - worst
    usable = spread > 0
    skipped = [matrix.attributes[i] for i in np.flatnonzero(~usable)]
    if skipped:
        warnings.warn(f"vikor: no spread on {skipped}; attribute(s) skipped", stacklevel=2)
    if not usable.any():
        n = matrix.values.shape[1]
        q = np.zeros(n)
        return BenchmarkRanking("vikor", q, np.ones(n, dtype=int), tied=n > 1, notes={"skipped": skipped})
    dist = (best[usable, None] - matrix.values[usable]) / spread[usable, None]
    w = matrix.weights[usable]
    s = (w[:, None] * dist).sum(axis=0)
    r = (w[:, None] * dist).max(axis=0)

    def scaled(x):
        span = x.max() - x.min()
        return np.zeros_like(x) if span <= 0 else (x - x.min()) / span

    q = v * scaled(s) + (1.0 - v) * scaled(r)
    ranks = dense_ranks(q, higher_better=False)
    return BenchmarkRanking(
        "vikor",
        q,
        ranks,
        tied=len(np.unique(q)) < q.size,
        notes={"S": s.tolist(), "R": r.tolist(), "Q": q.tolist(), "v": v, "skipped": skipped},
    )


def moora(matrix: DecisionMatrix) -> BenchmarkRanking:
    """Ratio-system normalization and a weighted sum, ranked descending."""
    matrix.validate()
    total = (_vector_normalized(matrix) * matrix.weights[:, None]).sum(axis=0)
    ranks = dense_ranks(total, higher_better=True)
    return BenchmarkRanking(
        "moora", total, ranks, tied=len(np.unique(total)) < total.size
    )


def _midranks(values) -> list[Fraction]:
    out = []
    for v in values:
        less = sum(1 for u in values if u < v)
        equal = sum(1 for u in values if u == v)
        out.append(Fraction(2 * less + equal + 1, 2))
    return out


def spearman(first, second) -> float:
    """Rank correlation; ties are converted to average (fractional) ranks.

    Tie-free integer inputs go through the exact rational formula
    1 - 6*sum(d^2)/(n(n^2-1)).
    """
    a = list(first)
    b = list(second)
    if len(a) != len(b):
        raise InvalidArgumentError("rankings must have equal length")
    n = len(a)
    if n < 2:
        raise InvalidArgumentError("need at least two entries")
    ra, rb = _midranks(a), _midranks(b)
    if len(set(a)) == n and len(set(b)) == n:
        d2 = sum((x - y) ** 2 for x, y in zip(ra, rb))
        return float(1 - Fraction(6) * d2 / Fraction(n * (n * n - 1)))
    mean_a = sum(ra) / n
    mean_b = sum(rb) / n
    cov = sum((x - mean_a) * (y - mean_b) for x, y in zip(ra, rb))
    var_a = sum((x - mean_a) ** 2 for x in ra)
    var_b = sum((y - mean_b) ** 2 for y in rb)
    if var_a == 0 or var_b == 0:
        raise InvalidArgumentError("constant ranking has no rank correlation")
    return float(cov) / math.sqrt(float(var_a) * float(var_b))


@dataclass
class StatsRow:
    mean: float
    skewness: float
    kurtosis: float  # excess
    coefficient_of_variation: float
    min: float
    max: float


def descriptive_stats(samples) -> StatsRow:
    """Population-moment summary of one weight trajectory."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise InvalidArgumentError("need at least two samples")
    mean = float(x.mean())
    if mean == 0.0:
        raise InvalidArgumentError("coefficient of variation undefined at zero mean")
    centered = x - mean
    m2 = float((centered**2).mean())
    if m2 == 0.0:
        return StatsRow(mean, 0.0, 0.0, 0.0, float(x.min()), float(x.max()))
    m3 = float((centered**3).mean())
    m4 = float((centered**4).mean())
    return StatsRow(
        mean=mean,
        skewness=m3 / m2**1.5,
        kurtosis=m4 / m2**2 - 3.0,
        coefficient_of_variation=math.sqrt(m2) / mean,
        min=float(x.min()),
        max=float(x.max()),
    )


@dataclass
class SensitivityReport:
    labels: dict[str, list[str]]
    samples: dict[str, np.ndarray]  # rows = scenarios, columns = entities
    stats: dict[str, list[StatsRow]]
    n_scenarios: int


def sensitivity_permutations(
    profile: PrProfile,
    table: NormalizedUtilityTable,
    cap: int,
    seed: int = 0,
    rank_to_alternative: np.ndarray | None = None,
) -> SensitivityReport:
    """Re-solve the closed form under permuted expert ranks.

    All I! assignments are enumerated when they fit under ``cap``; otherwise
    ``cap`` distinct permutations are sampled with the given seed.  Stage-1
    utilities do not depend on expert ranks, so the table is reused as-is.
    """
    if cap < 1:
        raise InvalidArgumentError("cap must be positive")
    profile.validate()
    table.validate()
    i = profile.n_experts
    total = math.factorial(i)
    if total <= cap:
        perms = list(itertools.permutations(range(1, i + 1)))
    else:
        # Keep the nominal assignment in the sample, then draw distinct
        # permutations around it.
        nominal = tuple(int(t) for t in profile.expert_ranks)
        rng = random.Random(seed)
        seen = {nominal}
        while len(seen) < cap:
            candidate = list(range(1, i + 1))
            rng.shuffle(candidate)
            seen.add(tuple(candidate))
        perms = [nominal] + sorted(seen - {nominal})

    n_alt = (
        rank_to_alternative.shape[2]
        if rank_to_alternative is not None
        else profile.n_ranks
    )
    expert_rows = np.empty((len(perms), i))
    attribute_rows = np.empty((len(perms), profile.n_attributes))
    alternative_rows = np.empty((len(perms), n_alt))
    for row, perm in enumerate(perms):
        permuted = PrProfile(
            np.array(perm),
            profile.attribute_rank_intervals,
            profile.utilities,
            profile.n_ranks,
        )
        solution = solve_stage2_closed_form(permuted, table, rank_to_alternative)
        groups = aggregate_weights(solution)
        expert_rows[row] = groups.experts
        attribute_rows[row] = groups.attributes
        alternative_rows[row] = groups.alternatives

    samples = {
        "experts": expert_rows,
        "attributes": attribute_rows,
        "alternatives": alternative_rows,
    }
    labels = {
        "experts": [f"E{a+1}" for a in range(i)],
        "attributes": [f"C{b+1}" for b in range(profile.n_attributes)],
        "alternatives": [f"A{k+1}" for k in range(n_alt)],
    }
    def column_stats(column: np.ndarray) -> StatsRow:
        if column.size < 2:
            v = float(column[0])
            return StatsRow(v, 0.0, 0.0, 0.0, v, v)
        return descriptive_stats(column)

    stats = {
        key: [column_stats(block[:, col]) for col in range(block.shape[1])]
        for key, block in samples.items()
    }
    return SensitivityReport(labels, samples, stats, len(perms))
