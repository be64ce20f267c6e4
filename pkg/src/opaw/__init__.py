"""Ordinal priority weight elicitation workbench.

Solvers for the classical ordinal priority LP, its preference-robust
two-stage extension with utility-ambiguity elicitation, and a robust
satisficing layer, plus benchmark rankers and a CLI/HTTP workbench.
"""

from .estimators import (
    OrdinalPriority,
    PreferenceRobustOrdinalPriority,
    RobustSatisficingOrdinalPriority,
)
from .profiles import GroupWeights, RankingProfile, WeightSolution

__version__ = "0.1.0"

__all__ = [
    "GroupWeights",
    "OrdinalPriority",
    "PreferenceRobustOrdinalPriority",
    "RankingProfile",
    "RobustSatisficingOrdinalPriority",
    "WeightSolution",
    "__version__",
]
