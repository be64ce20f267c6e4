"""Exception hierarchy shared by every solver and workbench module.

Each error carries a stable ``code`` string so the CLI and HTTP layers can
map failures to exit codes / status codes without parsing messages.
``category`` is either ``"validation"`` (caller mistake, CLI exit 2,
HTTP 400) or ``"solver"`` (numerical/feasibility failure, CLI exit 3,
HTTP 500).
"""

from __future__ import annotations


class OpawError(Exception):
    code = "ERROR"
    category = "solver"

    def __init__(self, message: str = ""):
        super().__init__(message or self.code)


class ValidationError(OpawError):
    category = "validation"


class SolverError(OpawError):
    category = "solver"


# --- linear programming ---

class MalformedProblemError(ValidationError):
    code = "MALFORMED_PROBLEM"


class SolverStallError(SolverError):
    """Simplex did not terminate within the pivot budget."""

    code = "SOLVER_STALL"


class NodeLimitError(SolverError):
    code = "NODE_LIMIT"


# --- rankings / profiles ---

class InvalidProfileError(ValidationError):
    code = "INVALID_PROFILE"


class InvalidArgumentError(ValidationError):
    code = "INVALID_ARG"


# --- utility ambiguity ---

class NonGridBreakpointError(ValidationError):
    code = "NON_GRID_BREAKPOINT"


class DomainMismatchError(ValidationError):
    code = "DOMAIN_MISMATCH"


class NonConcaveSamplesError(ValidationError):
    code = "NON_CONCAVE_SAMPLES"


class AmbiguitySetEmptyError(SolverError):
    """The elicited constraints admit no utility function at all."""

    code = "AMBIGUITY_SET_EMPTY"


class ZeroUtilitySumError(SolverError):
    code = "ZERO_UTILITY_SUM"


# --- elicitation sessions ---

class InvalidConfigError(ValidationError):
    code = "INVALID_CONFIG"


class SessionExhaustedError(ValidationError):
    code = "SESSION_EXHAUSTED"


class NoPendingQuestionError(ValidationError):
    code = "NO_PENDING_QUESTION"


class SessionInconsistentError(SolverError):
    code = "SESSION_INCONSISTENT"


# --- robust stage 2 / satisficing / inconsistency modes ---

class BoundUndefinedError(ValidationError):
    code = "BOUND_UNDEFINED"


class PerturbedRankOutOfDomainError(ValidationError):
    code = "PERTURBED_RANK_OUT_OF_DOMAIN"


class InfeasibleTargetError(SolverError):
    code = "INFEASIBLE_TARGET"


class InfeasibleProblemError(SolverError):
    code = "INFEASIBLE"


# --- benchmarks ---

class NormalizationError(ValidationError):
    code = "NORMALIZATION_ERROR"


# --- documents / store ---

class ParseError(ValidationError):
    code = "PARSE_ERROR"


class SchemaError(ValidationError):
    """Structured document validation failure.

    ``violations`` is a list of (json_pointer, message) pairs covering every
    problem found, not just the first one.
    """

    code = "SCHEMA_ERROR"

    def __init__(self, violations):
        self.violations = list(violations)
        detail = "; ".join(f"{ptr}: {msg}" for ptr, msg in self.violations)
        super().__init__(f"invalid document: {detail}")


class UnknownIdError(ValidationError):
    code = "UNKNOWN_ID"
