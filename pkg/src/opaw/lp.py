"""Dense linear programming for small, well-scaled problems.

Two-phase primal simplex on a dense tableau with Bland's anti-cycling rule
(entering: lowest eligible index; leaving: minimum ratio, ties broken by
lowest basis index), so identical problems always pivot identically and
return bit-identical solutions.  Binary mixed programs are handled by a
depth-first branch-and-bound on top of the LP relaxation.

Every problem in this package has at most a few hundred variables, which is
why the tableau is dense and no factorization is kept.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    MalformedProblemError,
    NodeLimitError,
    SolverStallError,
)

MIN = "min"
MAX = "max"

LESS_EQUAL = "<="
EQUAL = "=="
GREATER_EQUAL = ">="
_RELATIONS = (LESS_EQUAL, EQUAL, GREATER_EQUAL)

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

FEAS_TOL = 1e-9
OPT_TOL = 1e-9
_PIVOT_TOL = 1e-10
MAX_PIVOTS = 50_000
MILP_ABS_GAP = 1e-7
MILP_NODE_LIMIT = 1_000_000
MAX_BINARIES = 64

# Toggled by the CLI's --lp-trace flag; dumps the tableau after every pivot.
TRACE = False


@dataclass
class Constraint:
    coefficients: np.ndarray
    relation: str
    rhs: float

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)
        self.rhs = float(self.rhs)


@dataclass
class LinearProgram:
    """``sense``-imize ``objective @ x`` subject to row constraints and bounds.

    Bounds default to ``[0, +inf)`` per variable.
    """

    sense: str
    objective: np.ndarray
    constraints: list[Constraint] = field(default_factory=list)
    bounds: list[tuple[float, float]] | None = None

    def __post_init__(self):
        self.objective = np.asarray(self.objective, dtype=float)
        self.constraints = [
            c if isinstance(c, Constraint) else Constraint(*c) for c in self.constraints
        ]
        if self.bounds is None:
            self.bounds = [(0.0, math.inf)] * self.n

    @property
    def n(self) -> int:
        return self.objective.shape[0]

    def validate(self):
        if self.sense not in (MIN, MAX):
            raise MalformedProblemError(f"unknown sense {self.sense!r}")
        if self.objective.ndim != 1 or not np.all(np.isfinite(self.objective)):
            raise MalformedProblemError("objective must be a finite vector")
        if len(self.bounds) != self.n:
            raise MalformedProblemError("one bound pair per variable required")
        for j, (lo, hi) in enumerate(self.bounds):
            if math.isnan(lo) or math.isnan(hi) or lo > hi:
                raise MalformedProblemError(f"bad bounds for variable {j}: [{lo}, {hi}]")
        for i, con in enumerate(self.constraints):
            if con.coefficients.shape != (self.n,):
                raise MalformedProblemError(
                    f"constraint {i} has {con.coefficients.shape[0]} coefficients, expected {self.n}"
                )
            if con.relation not in _RELATIONS:
                raise MalformedProblemError(f"constraint {i} relation {con.relation!r}")
            if not math.isfinite(con.rhs) or not np.all(np.isfinite(con.coefficients)):
                raise MalformedProblemError(f"constraint {i} has non-finite data")


@dataclass
class LpSolution:
    status: str
    objective_value: float
    variable_values: np.ndarray | None
    active_set: list[int]


@dataclass
class MixedProgram:
    base: LinearProgram
    binary_indices: frozenset[int] = frozenset()

    def __post_init__(self):
        self.binary_indices = frozenset(int(j) for j in self.binary_indices)

    def validate(self):
        self.base.validate()
        if any(j < 0 or j >= self.base.n for j in self.binary_indices):
            raise MalformedProblemError("binary index out of variable range")
        if len(self.binary_indices) > MAX_BINARIES:
            raise MalformedProblemError(
                f"{len(self.binary_indices)} binaries exceeds the {MAX_BINARIES}-variable guard"
            )


class _PivotBudget:
    def __init__(self, limit: int):
        self.left = limit

    def spend(self):
        self.left -= 1
        if self.left < 0:
            raise SolverStallError(f"no termination within {MAX_PIVOTS} pivots")


def _dump(tableau, basis, label):
    print(f"[lp-trace] {label} basis={basis}", file=sys.stderr)
    with np.printoptions(precision=6, suppress=True, linewidth=200):
        print(tableau, file=sys.stderr)


def _pivot(tableau, basis, row, col):
    tableau[row] /= tableau[row, col]
    for i in range(tableau.shape[0]):
        if i != row and abs(tableau[i, col]) > 0.0:
            tableau[i] -= tableau[i, col] * tableau[row]
    basis[row] = col


def _run_simplex(tableau, basis, ncols, budget):
    """Minimize the reduced-cost row in place; Bland's rule throughout."""
    while True:
        cost = tableau[-1, :ncols]
        entering = -1
        for j in range(ncols):
            if cost[j] < -OPT_TOL:
                entering = j
                break
        if entering < 0:
            return OPTIMAL
        ratio = math.inf
        leaving = -1
        m = tableau.shape[0] - 1
        for i in range(m):
            a = tableau[i, entering]
            if a > _PIVOT_TOL:
                r = tableau[i, -1] / a
                if r < ratio - 1e-12 or (
                    abs(r - ratio) <= 1e-12 and (leaving < 0 or basis[i] < basis[leaving])
                ):
                    ratio = r
                    leaving = i
        if leaving < 0:
            return UNBOUNDED
        budget.spend()
        _pivot(tableau, basis, leaving, entering)
        if TRACE:
            _dump(tableau, basis, f"pivot col={entering} row={leaving}")


def _reduce_cost_row(tableau, basis):
    for i, b in enumerate(basis):
        coef = tableau[-1, b]
        if coef != 0.0:
            tableau[-1] -= coef * tableau[i]


def _solve_standard(A, b, c, budget):
    """min c@x s.t. A@x == b, x >= 0, with b >= 0 row-wise. Returns (status, x)."""
    m, n = A.shape
    art = np.eye(m)
    tableau = np.zeros((m + 1, n + m + 1))
    tableau[:m, :n] = A
    tableau[:m, n : n + m] = art
    tableau[:m, -1] = b
    tableau[-1, n : n + m] = 1.0
    basis = list(range(n, n + m))
    _reduce_cost_row(tableau, basis)
    if TRACE:
        _dump(tableau, basis, "phase-1 start")

    status = _run_simplex(tableau, basis, n + m, budget)
    if status != OPTIMAL:
        # Phase 1 is always bounded below by 0; anything else is a numeric fault.
        raise SolverStallError("phase-1 relaxation did not converge")
    phase1_value = -tableau[-1, -1]  # the corner carries the negated objective
    if phase1_value < -1e-7:
        raise SolverStallError("negative phase-1 optimum")
    if phase1_value > 1e-8:
        return INFEASIBLE, None

    # Drive leftover zero-level artificials out of the basis; a row where no
    # structural column can enter is redundant and is dropped.
    keep = []
    for i in range(m):
        if basis[i] < n:
            keep.append(i)
            continue
        entering = -1
        for j in range(n):
            if abs(tableau[i, j]) > _PIVOT_TOL:
                entering = j
                break
        if entering >= 0:
            budget.spend()
            _pivot(tableau, basis, i, entering)
            keep.append(i)
    rows = keep + [m]
    tableau = tableau[np.ix_(rows, list(range(n)) + [n + m])]
    basis = [basis[i] for i in keep]

    tableau[-1, :] = 0.0
    tableau[-1, :n] = c
    _reduce_cost_row(tableau, basis)
    if TRACE:
        _dump(tableau, basis, "phase-2 start")

    status = _run_simplex(tableau, basis, n, budget)
    if status == UNBOUNDED:
        return UNBOUNDED, None
    x = np.zeros(n)
    for i, bvar in enumerate(basis):
        x[bvar] = tableau[i, -1]
    np.clip(x, 0.0, None, out=x)
    return OPTIMAL, x


def solve_lp(problem: LinearProgram) -> LpSolution:
    """Solve a general-form LP; OPTIMAL solutions are feasible to FEAS_TOL."""
    problem.validate()
    n = problem.n

    # Map every original variable onto nonnegative standard-form columns:
    # shifted (x = lo + y), mirrored (x = hi - y), or split (x = y+ - y-).
    col_of = []  # per variable: ("shift", col, lo) | ("mirror", col, hi) | ("split", col_pos, col_neg)
    upper_rows = []  # (var_index, hi - lo) extra rows for two-sided bounds
    ncols = 0
    for j, (lo, hi) in enumerate(problem.bounds):
        if math.isinf(lo) and lo < 0 and math.isinf(hi):
            col_of.append(("split", ncols, ncols + 1))
            ncols += 2
        elif math.isinf(lo) and lo < 0:
            col_of.append(("mirror", ncols, hi))
            ncols += 1
        else:
            col_of.append(("shift", ncols, lo))
            ncols += 1
            if not math.isinf(hi):
                upper_rows.append((j, hi - lo))

    def to_columns(coeffs, out):
        for j in range(n):
            kind = col_of[j]
            if kind[0] == "shift":
                out[kind[1]] += coeffs[j]
            elif kind[0] == "mirror":
                out[kind[1]] -= coeffs[j]
            else:
                out[kind[1]] += coeffs[j]
                out[kind[2]] -= coeffs[j]

    def shift_offset(coeffs):
        off = 0.0
        for j in range(n):
            kind = col_of[j]
            if kind[0] == "shift" and kind[2] != 0.0:
                off += coeffs[j] * kind[2]
            elif kind[0] == "mirror":
                off += coeffs[j] * kind[2]
        return off

    rows = []
    rhs = []
    relations = []
    for con in problem.constraints:
        row = np.zeros(ncols)
        to_columns(con.coefficients, row)
        rows.append(row)
        rhs.append(con.rhs - shift_offset(con.coefficients))
        relations.append(con.relation)
    for j, ub in upper_rows:
        row = np.zeros(ncols)
        row[col_of[j][1]] = 1.0
        rows.append(row)
        rhs.append(ub)
        relations.append(LESS_EQUAL)

    m = len(rows)
    nslack = sum(1 for rel in relations if rel != EQUAL)
    A = np.zeros((m, ncols + nslack))
    b = np.zeros(m)
    s = ncols
    for i, (row, rel, r) in enumerate(zip(rows, relations, rhs)):
        sign = 1.0
        if r < 0:
            row = -row
            r = -r
            rel = {LESS_EQUAL: GREATER_EQUAL, GREATER_EQUAL: LESS_EQUAL, EQUAL: EQUAL}[rel]
            sign = -1.0
        A[i, :ncols] = row
        b[i] = r
        if rel == LESS_EQUAL:
            A[i, s] = 1.0
            s += 1
        elif rel == GREATER_EQUAL:
            A[i, s] = -1.0
            s += 1

    c = np.zeros(ncols + nslack)
    internal_obj = problem.objective if problem.sense == MIN else -problem.objective
    head = np.zeros(ncols)
    to_columns(internal_obj, head)
    c[:ncols] = head

    budget = _PivotBudget(MAX_PIVOTS)
    status, y = _solve_standard(A, b, c, budget)
    if status != OPTIMAL:
        return LpSolution(status, math.nan, None, [])

    x = np.zeros(n)
    for j in range(n):
        kind = col_of[j]
        if kind[0] == "shift":
            x[j] = kind[2] + y[kind[1]]
        elif kind[0] == "mirror":
            x[j] = kind[2] - y[kind[1]]
        else:
            x[j] = y[kind[1]] - y[kind[2]]

    value = float(problem.objective @ x)
    active = [
        i
        for i, con in enumerate(problem.constraints)
        if abs(float(con.coefficients @ x) - con.rhs) <= FEAS_TOL
    ]
    return LpSolution(OPTIMAL, value, x, active)


def _is_better(candidate: float, incumbent: float, sense: str) -> bool:
    return candidate > incumbent if sense == MAX else candidate < incumbent


def _can_prune(bound: float, incumbent: float, sense: str) -> bool:
    if sense == MAX:
        return bound <= incumbent + MILP_ABS_GAP
    return bound >= incumbent - MILP_ABS_GAP


def solve_milp(problem: MixedProgram) -> LpSolution:
    """Depth-first branch-and-bound over the binary variables.

    OPTIMAL means the incumbent is within MILP_ABS_GAP of the true optimum;
    exploration past MILP_NODE_LIMIT nodes raises NodeLimitError.
    """
    problem.validate()
    base = problem.base
    binaries = sorted(problem.binary_indices)
    if not binaries:
        return solve_lp(base)

    incumbent_value = None
    incumbent_x = None
    nodes = 0
    stack: list[dict[int, int]] = [{}]
    while stack:
        fixing = stack.pop()
        nodes += 1
        if nodes > MILP_NODE_LIMIT:
            raise NodeLimitError(f"exceeded {MILP_NODE_LIMIT} branch-and-bound nodes")

        bounds = list(base.bounds)
        for j in binaries:
            lo, hi = bounds[j]
            v = fixing.get(j)
            if v is None:
                bounds[j] = (max(lo, 0.0), min(hi, 1.0))
            else:
                bounds[j] = (float(v), float(v))
        relax = LinearProgram(base.sense, base.objective, list(base.constraints), bounds)
        sol = solve_lp(relax)
        if sol.status == INFEASIBLE:
            continue
        if sol.status == UNBOUNDED:
            # Binaries are boxed, so the continuous part is unbounded and the
            # mixed program inherits it.
            return LpSolution(UNBOUNDED, math.nan, None, [])
        if incumbent_value is not None and _can_prune(sol.objective_value, incumbent_value, base.sense):
            continue

        branch_var = -1
        for j in binaries:
            if j not in fixing and abs(sol.variable_values[j] - round(sol.variable_values[j])) > 1e-7:
                branch_var = j
                break
        if branch_var < 0:
            x = sol.variable_values.copy()
            for j in binaries:
                x[j] = float(round(x[j]))
            value = float(base.objective @ x)
            if incumbent_value is None or _is_better(value, incumbent_value, base.sense):
                incumbent_value = value
                incumbent_x = x
            continue
        # LIFO: explore the 0-branch first for a deterministic tree walk.
        stack.append({**fixing, branch_var: 1})
        stack.append({**fixing, branch_var: 0})

    if incumbent_x is None:
        return LpSolution(INFEASIBLE, math.nan, None, [])
    active = [
        i
        for i, con in enumerate(base.constraints)
        if abs(float(con.coefficients @ incumbent_x) - con.rhs) <= FEAS_TOL
    ]
    return LpSolution(OPTIMAL, incumbent_value, incumbent_x, active)
