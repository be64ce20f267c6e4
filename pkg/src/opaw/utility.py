"""Utility ambiguity sets over a ranking grid and the worst-case-utility LP.

A candidate utility lives on the grid 0 = tau_0 < ... < tau_R = theta as a
piecewise linear function described by grid values y and segment slopes mu.
The ambiguity set intersects five families: monotone (mu >= 0), normalized
(y_0 = 0, y_R = 1), concave (mu nonincreasing), slope-capped (mu <= G), and
moment constraints of the form integral(psi du) <= c for step functions psi.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import lp
from .errors import (
    AmbiguitySetEmptyError,
    DomainMismatchError,
    InvalidArgumentError,
    NonConcaveSamplesError,
    NonGridBreakpointError,
)

_GRID_TOL = 1e-9


@dataclass
class StepFunction:
    """Right-continuous step function on [0, domain_end].

    ``levels`` has one more entry than ``breakpoints``: levels[k] is the value
    on [breakpoints[k-1], breakpoints[k]).  Point values on null sets do not
    matter for integration against continuous utilities, so indicators over
    half-open intervals are represented up to their jump locations.
    """

    domain_end: float
    breakpoints: np.ndarray
    levels: np.ndarray

    def __post_init__(self):
        self.breakpoints = np.asarray(self.breakpoints, dtype=float)
        self.levels = np.asarray(self.levels, dtype=float)
        if self.levels.shape[0] != self.breakpoints.shape[0] + 1:
            raise InvalidArgumentError("need len(levels) == len(breakpoints) + 1")
        if self.breakpoints.size and (
            np.any(np.diff(self.breakpoints) <= 0)
            or self.breakpoints[0] < -_GRID_TOL
            or self.breakpoints[-1] > self.domain_end + _GRID_TOL
        ):
            raise InvalidArgumentError("breakpoints must ascend strictly within the domain")

    @classmethod
    def indicator_upper(cls, start: float, domain_end: float) -> "StepFunction":
        """Indicator of [start, domain_end]."""
        if start <= 0.0:
            return cls(domain_end, [], [1.0])
        return cls(domain_end, [start], [0.0, 1.0])

    @classmethod
    def indicator_prefix(cls, end: float, domain_end: float) -> "StepFunction":
        """Indicator of the prefix up to ``end`` (integration-equivalent to (0, end])."""
        if end >= domain_end:
            return cls(domain_end, [], [1.0])
        return cls(domain_end, [end], [1.0, 0.0])

    @classmethod
    def combine(cls, terms: list[tuple[float, "StepFunction"]], domain_end: float) -> "StepFunction":
        points = sorted({float(b) for _, f in terms for b in f.breakpoints})
        lefts = [0.0] + points
        levels = [sum(c * f.value(x) for c, f in terms) for x in lefts]
        return cls(domain_end, points, levels).simplified()

    def simplified(self) -> "StepFunction":
        bps, levels = [], [self.levels[0]]
        for b, lv in zip(self.breakpoints, self.levels[1:]):
            if lv != levels[-1]:
                bps.append(b)
                levels.append(lv)
        return StepFunction(self.domain_end, bps, levels)

    def value(self, tau: float) -> float:
        idx = int(np.searchsorted(self.breakpoints, tau, side="right"))
        return float(self.levels[idx])

    def integral(self, a: float, b: float) -> float:
        """Exact integral of the step function over [a, b]."""
        if b < a:
            raise InvalidArgumentError("integration bounds out of order")
        edges = [a] + [float(p) for p in self.breakpoints if a < p < b] + [b]
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            total += self.value(lo) * (hi - lo)
        return total

    def is_zero(self) -> bool:
        return bool(np.all(self.levels == 0.0))

    def jumps_on(self, grid: np.ndarray, tol: float = _GRID_TOL) -> bool:
        return all(np.min(np.abs(grid - b)) <= tol for b in self.breakpoints)


@dataclass
class MomentConstraint:
    """integral(psi du) <= bound.  Equalities are stored as +/- pairs upstream."""

    psi: StepFunction
    bound: float

    def segment_coefficients(self, grid: np.ndarray) -> np.ndarray:
        return np.array(
            [self.psi.integral(float(a), float(b)) for a, b in zip(grid[:-1], grid[1:])]
        )


@dataclass
class UtilityAmbiguitySpec:
    """Grid, slope cap, and accumulated moment constraints."""

    grid: np.ndarray
    lipschitz: float
    constraints: list[MomentConstraint] = field(default_factory=list)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)

    @classmethod
    def on_ranks(cls, n_ranks: int, lipschitz: float, constraints=None) -> "UtilityAmbiguitySpec":
        return cls(np.arange(n_ranks + 1, dtype=float), lipschitz, list(constraints or []))

    @property
    def domain_end(self) -> float:
        return float(self.grid[-1])

    @property
    def n_segments(self) -> int:
        return self.grid.shape[0] - 1

    def validate(self):
        if self.grid.ndim != 1 or self.grid.shape[0] < 2:
            raise InvalidArgumentError("grid needs at least two points")
        if abs(self.grid[0]) > _GRID_TOL or np.any(np.diff(self.grid) <= 0):
            raise InvalidArgumentError("grid must ascend strictly from 0")
        if self.lipschitz * self.domain_end < 1.0 - 1e-9:
            raise InvalidArgumentError(
                "slope cap below 1/domain makes every normalized utility infeasible"
            )
        for c in self.constraints:
            if abs(c.psi.domain_end - self.domain_end) > _GRID_TOL:
                raise DomainMismatchError("constraint domain differs from the grid domain")


@dataclass
class PiecewiseLinearUtility:
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise InvalidArgumentError("one value per grid point required")

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.grid)

    @property
    def domain_end(self) -> float:
        return float(self.grid[-1])

    def value(self, tau):
        return np.interp(tau, self.grid, self.values)

    def validate(self, lipschitz: float | None = None, tol: float = 1e-9):
        if abs(self.values[0]) > tol or abs(self.values[-1] - 1.0) > tol:
            raise InvalidArgumentError("utility must be normalized to u(0)=0, u(end)=1")
        mu = self.slopes
        if np.any(mu < -tol):
            raise InvalidArgumentError("utility must be nondecreasing")
        if np.any(np.diff(mu) > tol):
            raise InvalidArgumentError("slopes must be nonincreasing (concavity)")
        if lipschitz is not None and np.any(mu > lipschitz + tol):
            raise InvalidArgumentError("slope cap exceeded")

    @classmethod
    def chord(cls, grid) -> "PiecewiseLinearUtility":
        grid = np.asarray(grid, dtype=float)
        return cls(grid, grid / grid[-1])


@dataclass
class ScenarioSet:
    """Finite lottery: outcome h_e happens with probability p_e."""

    outcomes: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        self.outcomes = np.asarray(self.outcomes, dtype=float)
        self.probabilities = np.asarray(self.probabilities, dtype=float)

    @classmethod
    def uniform_on_ranks(cls, grid) -> "ScenarioSet":
        grid = np.asarray(grid, dtype=float)
        n = grid.shape[0] - 1
        return cls(grid[1:], np.full(n, 1.0 / n))

    def validate(self, domain_end: float):
        if self.outcomes.shape != self.probabilities.shape or self.outcomes.ndim != 1:
            raise InvalidArgumentError("outcomes and probabilities must be parallel vectors")
        if self.outcomes.size == 0:
            raise InvalidArgumentError("at least one scenario required")
        if np.any(self.probabilities < -1e-12) or abs(self.probabilities.sum() - 1.0) > 1e-9:
            raise InvalidArgumentError("probabilities must form a distribution")
        if np.any(self.outcomes < -_GRID_TOL) or np.any(self.outcomes > domain_end + _GRID_TOL):
            raise InvalidArgumentError("scenario outcomes leave the utility domain")


@dataclass
class Stage1Result:
    rho: float
    utility: PiecewiseLinearUtility
    support_lines: np.ndarray  # one (slope, intercept) row per scenario


def integrate_step_against_pl(psi: StepFunction, u: PiecewiseLinearUtility) -> float:
    """Exact Lebesgue-Stieltjes integral of a step psi against du."""
    if abs(psi.domain_end - u.domain_end) > _GRID_TOL:
        raise DomainMismatchError("step function and utility live on different domains")
    mu = u.slopes
    return float(
        sum(
            mu[r] * psi.integral(float(u.grid[r]), float(u.grid[r + 1]))
            for r in range(len(mu))
        )
    )


def pla_of_samples(grid, samples, enforce_concavity: bool = True) -> PiecewiseLinearUtility:
    """Connect sampled utility values into a piecewise linear utility."""
    grid = np.asarray(grid, dtype=float)
    samples = np.asarray(samples, dtype=float)
    u = PiecewiseLinearUtility(grid, samples)
    if abs(samples[0]) > 1e-9 or abs(samples[-1] - 1.0) > 1e-9:
        raise InvalidArgumentError("samples must be normalized at the domain ends")
    if np.any(np.diff(samples) < -1e-9):
        raise InvalidArgumentError("samples must be nondecreasing")
    if enforce_concavity and np.any(np.diff(u.slopes) > 1e-9):
        raise NonConcaveSamplesError("sampled slopes increase; not a concave utility")
    return u


def pseudo_metric_sup(u1: PiecewiseLinearUtility, u2: PiecewiseLinearUtility) -> float:
    """sup |u1 - u2| over the common domain, exact on merged breakpoints."""
    if abs(u1.domain_end - u2.domain_end) > _GRID_TOL:
        raise DomainMismatchError("utilities live on different domains")
    points = np.union1d(u1.grid, u2.grid)
    return float(np.max(np.abs(u1.value(points) - u2.value(points))))


def _require_on_grid(grid: np.ndarray, *points: float):
    for p in points:
        if np.min(np.abs(grid - p)) > _GRID_TOL:
            raise NonGridBreakpointError(f"breakpoint {p} is not a grid point")


def make_constraint(kind: str, grid, **params) -> list[MomentConstraint]:
    """Moment constraints for the standard elicitation patterns.

    Equality-style information (ratio scales, absolute differences, pinned
    values) is emitted as a +/- inequality pair; one-sided comparisons emit a
    single constraint.  All referenced points must be grid points so that the
    piecewise linear restriction stays lossless.
    """
    grid = np.asarray(grid, dtype=float)
    theta = float(grid[-1])

    def equality_pair(psi: StepFunction, c: float) -> list[MomentConstraint]:
        negated = StepFunction.combine([(-1.0, psi)], theta)
        return [MomentConstraint(psi, c), MomentConstraint(negated, -c)]

    if kind == "ratio_scale":
        r, ratio = float(params["rank"]), float(params["ratio"])
        _require_on_grid(grid, r, r - 1)
        psi = StepFunction.combine(
            [
                (1.0, StepFunction.indicator_prefix(r, theta)),
                (-ratio, StepFunction.indicator_prefix(r - 1, theta)),
            ],
            theta,
        )
        return equality_pair(psi, 0.0)
    if kind == "absolute_difference":
        r, diff = float(params["rank"]), float(params["difference"])
        _require_on_grid(grid, r, r - 1)
        psi = StepFunction.combine(
            [
                (1.0, StepFunction.indicator_prefix(r, theta)),
                (-1.0, StepFunction.indicator_prefix(r - 1, theta)),
            ],
            theta,
        )
        return equality_pair(psi, diff)
    if kind == "lower_bound":
        r, value = float(params["rank"]), float(params["value"])
        _require_on_grid(grid, r)
        return equality_pair(StepFunction.indicator_prefix(r, theta), value)
    if kind == "lottery_comparison":
        r1, r2, r3 = (float(params[k]) for k in ("r1", "r2", "r3"))
        p = float(params["p"])
        preferred = params["preferred"]
        _require_on_grid(grid, r1, r2, r3)
        psi = lottery_psi(r1, r2, r3, p, theta)
        if preferred == "lottery":
            psi = StepFunction.combine([(-1.0, psi)], theta)
        elif preferred != "certain":
            raise InvalidArgumentError("preferred must be 'lottery' or 'certain'")
        return [MomentConstraint(psi, 0.0)]
    if kind == "dominance":
        better, worse = params["better_cdf"], params["worse_cdf"]
        for f in (better, worse):
            if not f.jumps_on(grid):
                raise NonGridBreakpointError("dominance lotteries must jump at grid points")
        psi = StepFunction.combine([(1.0, better), (-1.0, worse)], theta)
        return [MomentConstraint(psi, 0.0)]
    if kind == "pseudo_metric_ball":
        deltas, nominal, radius = params["deltas"], params["nominal"], float(params["radius"])
        out = []
        for delta in deltas:
            if not delta.jumps_on(grid):
                raise NonGridBreakpointError("ball directions must jump at grid points")
            center = integrate_step_against_pl(delta, nominal)
            negated = StepFunction.combine([(-1.0, delta)], theta)
            out.append(MomentConstraint(delta, radius + center))
            out.append(MomentConstraint(negated, radius - center))
        return out
    raise InvalidArgumentError(f"unknown constraint kind {kind!r}")


def lottery_psi(r1: float, r2: float, r3: float, p: float, domain_end: float) -> StepFunction:
    """Step function whose du-integral compares a two-point lottery on
    (r1, r3) with certain r2: (1-p)*I[r1,end] + p*I[r3,end] - I[r2,end]."""
    return StepFunction.combine(
        [
            (1.0 - p, StepFunction.indicator_upper(r1, domain_end)),
            (p, StepFunction.indicator_upper(r3, domain_end)),
            (-1.0, StepFunction.indicator_upper(r2, domain_end)),
        ],
        domain_end,
    )


def _shape_block(spec: UtilityAmbiguitySpec, extra_vars: int = 0):
    """Rows shared by every LP over the spec, without normalization anchors.

    Variable layout: [y_0..y_R, mu_0..mu_{R-1}, <extra>].  Returns
    (constraints, bounds, nvars, y_offset=0, mu_offset=R+1).
    """
    grid = spec.grid
    n_points = grid.shape[0]
    n_seg = n_points - 1
    nvars = n_points + n_seg + extra_vars
    mu0 = n_points
    cons = []
    for r in range(n_seg):
        row = np.zeros(nvars)
        row[r + 1] = 1.0
        row[r] = -1.0
        row[mu0 + r] = -(grid[r + 1] - grid[r])
        cons.append(lp.Constraint(row, lp.EQUAL, 0.0))
    for r in range(n_seg - 1):
        row = np.zeros(nvars)
        row[mu0 + r + 1] = 1.0
        row[mu0 + r] = -1.0
        cons.append(lp.Constraint(row, lp.LESS_EQUAL, 0.0))
    for mc in spec.constraints:
        coef = mc.segment_coefficients(grid)
        row = np.zeros(nvars)
        row[mu0 : mu0 + n_seg] = coef
        cons.append(lp.Constraint(row, lp.LESS_EQUAL, mc.bound))
    bounds = [(-np.inf, np.inf)] * n_points
    bounds += [(0.0, float(spec.lipschitz))] * n_seg
    bounds += [(-np.inf, np.inf)] * extra_vars
    return cons, bounds, nvars, mu0


def _anchor_rows(nvars: int, anchors) -> list[lp.Constraint]:
    rows = []
    for idx, val in anchors:
        row = np.zeros(nvars)
        row[idx] = 1.0
        rows.append(lp.Constraint(row, lp.EQUAL, float(val)))
    return rows


def value_range_on_grid(
    spec: UtilityAmbiguitySpec,
    index: int,
    anchors: tuple[tuple[int, float], tuple[int, float]] | None = None,
) -> tuple[float, float]:
    """Feasible [min, max] of the utility value at one grid index.

    ``anchors`` pins two grid values and replaces the default normalization
    (y_0 = 0, y_end = 1); the elicitation loop uses it to renormalize a
    question triple in place.
    """
    spec.validate()
    if anchors is None:
        anchors = ((0, 0.0), (spec.grid.shape[0] - 1, 1.0))
    cons, bounds, nvars, _ = _shape_block(spec)
    cons += _anchor_rows(nvars, anchors)
    objective = np.zeros(nvars)
    objective[index] = 1.0
    out = []
    for sense in (lp.MIN, lp.MAX):
        sol = lp.solve_lp(lp.LinearProgram(sense, objective, cons, list(bounds)))
        if sol.status != lp.OPTIMAL:
            raise AmbiguitySetEmptyError(
                f"no utility satisfies the accumulated constraints ({sol.status})"
            )
        out.append(sol.objective_value)
    return out[0], out[1]


def spec_is_feasible(spec: UtilityAmbiguitySpec) -> bool:
    try:
        value_range_on_grid(spec, 0)
    except AmbiguitySetEmptyError:
        return False
    return True


def build_stage1_lp(spec: UtilityAmbiguitySpec, scenarios: ScenarioSet) -> lp.LinearProgram:
    """Worst-case expected utility as one finite LP.

    On top of the shape rows, each scenario e gets a support line
    (a_e, b_e) forced to majorize the utility at every grid point; minimizing
    sum_e p_e * (a_e h_e + b_e) therefore minimizes the expected utility of
    the lottery over the ambiguity set.
    """
    grid = spec.grid
    n_points = grid.shape[0]
    n_seg = n_points - 1
    n_sc = scenarios.outcomes.shape[0]
    cons, bounds, nvars, mu0 = _shape_block(spec, extra_vars=2 * n_sc)
    a0 = n_points + n_seg
    b0 = a0 + n_sc
    cons += _anchor_rows(nvars, ((0, 0.0), (n_points - 1, 1.0)))
    for e in range(n_sc):
        bounds[a0 + e] = (0.0, np.inf)
        for r in range(n_points):
            row = np.zeros(nvars)
            row[r] = 1.0
            row[a0 + e] = -float(grid[r])
            row[b0 + e] = -1.0
            cons.append(lp.Constraint(row, lp.LESS_EQUAL, 0.0))
    objective = np.zeros(nvars)
    objective[a0 : a0 + n_sc] = scenarios.probabilities * scenarios.outcomes
    objective[b0 : b0 + n_sc] = scenarios.probabilities
    return lp.LinearProgram(lp.MIN, objective, cons, bounds)


def solve_worst_case_utility(
    spec: UtilityAmbiguitySpec, scenarios: ScenarioSet | None = None
) -> Stage1Result:
    """Minimize expected utility over the ambiguity set and return the
    minimizing piecewise linear utility."""
    spec.validate()
    if scenarios is None:
        scenarios = ScenarioSet.uniform_on_ranks(spec.grid)
    scenarios.validate(spec.domain_end)
    problem = build_stage1_lp(spec, scenarios)
    sol = lp.solve_lp(problem)
    if sol.status == lp.INFEASIBLE:
        raise AmbiguitySetEmptyError("elicited preferences admit no utility function")
    if sol.status != lp.OPTIMAL:
        raise AmbiguitySetEmptyError(f"worst-case utility LP ended {sol.status}")
    n_points = spec.grid.shape[0]
    n_seg = n_points - 1
    n_sc = scenarios.outcomes.shape[0]
    y = sol.variable_values[:n_points].copy()
    y[np.abs(y) < 1e-12] = 0.0
    y[0] = 0.0
    y[-1] = 1.0
    a = sol.variable_values[n_points + n_seg : n_points + n_seg + n_sc]
    b = sol.variable_values[n_points + n_seg + n_sc :]
    return Stage1Result(
        rho=float(sol.objective_value),
        utility=PiecewiseLinearUtility(spec.grid.copy(), y),
        support_lines=np.column_stack([a, b]),
    )
