"""Adaptive lottery questionnaire that bisects a utility ambiguity set.

Each round draws ranks r1 < r3 and r2 in between, renormalizes the current
set so u(r1) = 0 and u(r3) = 1, computes the feasible range [C_lo, C_hi] of
u(r2) by LP, and asks the expert to compare the certain outcome r2 with the
lottery paying r3 with probability p = (C_lo + C_hi) / 2 (else r1).  Either
answer cuts the feasible interval at its midpoint, so the ambiguity narrows
by half per question.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AmbiguitySetEmptyError,
    InvalidConfigError,
    NoPendingQuestionError,
    SessionExhaustedError,
    SessionInconsistentError,
)
from .utility import (
    MomentConstraint,
    StepFunction,
    UtilityAmbiguitySpec,
    lottery_psi,
    spec_is_feasible,
    value_range_on_grid,
)

PREFERS_LOTTERY = "lottery"
PREFERS_CERTAIN = "certain"

ACTIVE = "active"
COMPLETE = "complete"
INCONSISTENT = "inconsistent"


@dataclass
class LotteryQuestion:
    index: int
    r1: int
    r2: int
    r3: int
    p: float
    c_lo: float
    c_hi: float

    def psi(self, domain_end: float) -> StepFunction:
        return lottery_psi(self.r1, self.r2, self.r3, self.p, domain_end)


@dataclass
class ElicitationSession:
    """Single-writer questionnaire state; distinct sessions are independent."""

    n_ranks: int
    lipschitz: float
    target_questions: int
    seed: int
    status: str = ACTIVE
    budget_warning: bool = False
    asked: list[tuple[LotteryQuestion, str]] = field(default_factory=list)
    constraints: list[MomentConstraint] = field(default_factory=list)
    pending: LotteryQuestion | None = None
    _rng: random.Random = field(default=None, repr=False)

    def __post_init__(self):
        if self._rng is None:
            self._rng = random.Random(self.seed)

    # -- question loop -----------------------------------------------------

    def spec(self) -> UtilityAmbiguitySpec:
        return UtilityAmbiguitySpec.on_ranks(self.n_ranks, self.lipschitz, list(self.constraints))

    def _draw_triple(self) -> tuple[int, int, int]:
        # Redraw until the pair is distinct and the local chord slope
        # 1/(r3-r1) fits under the cap, otherwise the renormalized LP would
        # be vacuously infeasible.
        while True:
            a = self._rng.randint(1, self.n_ranks)
            b = self._rng.randint(1, self.n_ranks)
            if a != b and abs(a - b) * self.lipschitz >= 1.0 - 1e-12:
                break
        r1, r3 = min(a, b), max(a, b)
        r2 = self._rng.randint(r1, r3)
        return r1, r2, r3

    def next_question(self) -> LotteryQuestion:
        if self.status == INCONSISTENT:
            raise SessionInconsistentError("session went inconsistent; repair before asking")
        if self.pending is not None:
            return self.pending
        if len(self.asked) >= self.target_questions:
            raise SessionExhaustedError("question budget used up")
        spec = self.spec()
        for _ in range(500):
            r1, r2, r3 = self._draw_triple()
            try:
                c_lo, c_hi = value_range_on_grid(spec, r2, anchors=((r1, 0.0), (r3, 1.0)))
            except AmbiguitySetEmptyError:
                # Accumulated answers can make a particular triple impossible
                # to renormalize (the set itself is still nonempty); such
                # triples are redrawn like degenerate pairs.
                continue
            break
        else:
            raise AmbiguitySetEmptyError("no renormalizable question triple found")
        c_lo, c_hi = min(c_lo, c_hi), max(c_lo, c_hi)
        self.pending = LotteryQuestion(
            index=len(self.asked),
            r1=r1,
            r2=r2,
            r3=r3,
            p=(c_lo + c_hi) / 2.0,
            c_lo=c_lo,
            c_hi=c_hi,
        )
        return self.pending

    def record_answer(self, answer: str) -> "ElicitationSession":
        """Turn the pending question plus the expert's pick into one
        moment constraint and re-check feasibility."""
        if self.pending is None:
            raise NoPendingQuestionError("no question is awaiting an answer")
        if answer not in (PREFERS_LOTTERY, PREFERS_CERTAIN):
            raise InvalidConfigError(f"answer must be one of {PREFERS_LOTTERY!r}, {PREFERS_CERTAIN!r}")
        question = self.pending
        psi = question.psi(float(self.n_ranks))
        if answer == PREFERS_LOTTERY:
            psi = StepFunction.combine([(-1.0, psi)], float(self.n_ranks))
        self.constraints.append(MomentConstraint(psi, 0.0))
        self.asked.append((question, answer))
        self.pending = None
        if not spec_is_feasible(self.spec()):
            self.status = INCONSISTENT
        elif len(self.asked) >= self.target_questions:
            self.status = COMPLETE
        return self

    # -- read-only views ----------------------------------------------------

    def utility_band(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Pointwise [min, max] of u at every grid point under the global
        normalization; shrinks monotonically as answers accumulate."""
        spec = self.spec()
        grid = spec.grid
        lower = np.empty(grid.shape[0])
        upper = np.empty(grid.shape[0])
        for idx in range(grid.shape[0]):
            lower[idx], upper[idx] = value_range_on_grid(spec, idx)
        return grid, lower, upper

    def finalize(self) -> UtilityAmbiguitySpec:
        if self.status == INCONSISTENT:
            raise SessionInconsistentError(
                "inconsistent answers; route through an inconsistency-tolerant solve"
            )
        return self.spec()

    # -- persistence ---------------------------------------------------------

    def to_dict(self) -> dict:
        def question_dict(q: LotteryQuestion) -> dict:
            return {
                "index": q.index,
                "r1": q.r1,
                "r2": q.r2,
                "r3": q.r3,
                "p": q.p,
                "c_lo": q.c_lo,
                "c_hi": q.c_hi,
            }

        state = self._rng.getstate()
        return {
            "schema_version": 1,
            "n_ranks": self.n_ranks,
            "lipschitz": self.lipschitz,
            "target_questions": self.target_questions,
            "seed": self.seed,
            "status": self.status,
            "budget_warning": self.budget_warning,
            "asked": [
                {"question": question_dict(q), "answer": answer} for q, answer in self.asked
            ],
            "pending": question_dict(self.pending) if self.pending is not None else None,
            "constraints": [
                {
                    "psi": {
                        "domain_end": c.psi.domain_end,
                        "breakpoints": c.psi.breakpoints.tolist(),
                        "levels": c.psi.levels.tolist(),
                    },
                    "bound": c.bound,
                }
                for c in self.constraints
            ],
            "rng_state": [state[0], list(state[1]), state[2]],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ElicitationSession":
        def question_from(d: dict) -> LotteryQuestion:
            return LotteryQuestion(
                index=int(d["index"]),
                r1=int(d["r1"]),
                r2=int(d["r2"]),
                r3=int(d["r3"]),
                p=float(d["p"]),
                c_lo=float(d["c_lo"]),
                c_hi=float(d["c_hi"]),
            )

        session = cls(
            n_ranks=int(doc["n_ranks"]),
            lipschitz=float(doc["lipschitz"]),
            target_questions=int(doc["target_questions"]),
            seed=int(doc["seed"]),
            status=doc["status"],
            budget_warning=bool(doc["budget_warning"]),
        )
        session.asked = [
            (question_from(item["question"]), item["answer"]) for item in doc["asked"]
        ]
        session.pending = question_from(doc["pending"]) if doc.get("pending") else None
        session.constraints = [
            MomentConstraint(
                StepFunction(
                    float(c["psi"]["domain_end"]),
                    c["psi"]["breakpoints"],
                    c["psi"]["levels"],
                ),
                float(c["bound"]),
            )
            for c in doc["constraints"]
        ]
        version, internal, gauss = doc["rng_state"]
        session._rng.setstate((version, tuple(internal), gauss))
        return session


def start_session(
    n_ranks: int, lipschitz: float, target_questions: int, seed: int
) -> ElicitationSession:
    """Fresh session over the integer rank grid 0..n_ranks."""
    if n_ranks < 2:
        raise InvalidConfigError("need at least two ranks")
    if target_questions < 0:
        raise InvalidConfigError("question budget cannot be negative")
    if lipschitz * n_ranks < 1.0 - 1e-12:
        raise InvalidConfigError("slope cap below 1/n_ranks leaves no feasible utility")
    return ElicitationSession(
        n_ranks=int(n_ranks),
        lipschitz=float(lipschitz),
        target_questions=int(target_questions),
        seed=int(seed),
        budget_warning=3 * int(target_questions) + 2 > int(n_ranks),
    )
