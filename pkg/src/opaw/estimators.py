"""Estimator-style front doors for the three weight solvers.

The solvers consume one decision instance and expose the fitted weight
system through trailing-underscore attributes, so they compose with
scikit-learn tooling (``get_params``/``set_params``/``clone``) even though
there is nothing to predict on fresh samples.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import opa
from .benchmarks import dense_ranks
from .errors import InvalidArgumentError
from .opa_pr import PrInstance, solve_opa_pr
from .opa_prs import PrsInstance, solve_opa_prs
from .profiles import RankingProfile


def check_ranking_profile(X) -> RankingProfile:
    """Accept a RankingProfile or a plain instance-document dict."""
    if isinstance(X, RankingProfile):
        X.validate()
        return X
    if isinstance(X, dict):
        from .workbench.documents import ranking_profile_from_document

        return ranking_profile_from_document(X)
    raise InvalidArgumentError(f"cannot interpret {type(X).__name__} as a ranking profile")


def check_pr_instance(X) -> PrInstance:
    if isinstance(X, PrInstance):
        return X
    if isinstance(X, dict):
        from .workbench.documents import pr_instance_from_document

        return pr_instance_from_document(X)
    raise InvalidArgumentError(f"cannot interpret {type(X).__name__} as a robust instance")


def _require_fitted(estimator, attribute: str):
    if not hasattr(estimator, attribute):
        raise NotFittedError(f"{type(estimator).__name__} is not fitted yet; call fit first")


class OrdinalPriority(BaseEstimator):
    """Classical ordinal-priority weights from one ranking profile.

    Parameters
    ----------
    method : "closed_form" or "lp"
        The closed form is exact and fast; the LP path exists as an
        independent route for cross-checking.
    """

    def __init__(self, method: str = "closed_form"):
        self.method = method

    def fit(self, X, y=None):
        profile = check_ranking_profile(X)
        if self.method == "closed_form":
            solution = opa.solve_opa_closed_form(profile)
        elif self.method == "lp":
            solution = opa.solve_opa_lp(profile)
        else:
            raise InvalidArgumentError("method must be 'closed_form' or 'lp'")
        groups = opa.aggregate_weights(solution)
        self.solution_ = solution
        self.z_ = solution.z
        self.weights_ = solution.weights
        self.expert_weights_ = groups.experts
        self.attribute_weights_ = groups.attributes
        self.alternative_weights_ = groups.alternatives
        self.ranking_ = dense_ranks(groups.alternatives)
        return self

    def predict(self, X=None) -> np.ndarray:
        """Alternative ranking (1 = best) of the fitted instance."""
        _require_fitted(self, "ranking_")
        return self.ranking_


class PreferenceRobustOrdinalPriority(BaseEstimator):
    """Two-stage robust weights: worst-case utilities, then the closed form
    under worst-case attribute ranks."""

    def __init__(self, cross_check: bool = False):
        self.cross_check = cross_check

    def fit(self, X, y=None):
        instance = check_pr_instance(X)
        result = solve_opa_pr(instance, cross_check=self.cross_check)
        groups = result.groups
        self.result_ = result
        self.z_ = result.solution.z
        self.weights_ = result.solution.weights
        self.utilities_ = result.profile.utilities
        self.expert_weights_ = groups.experts
        self.attribute_weights_ = groups.attributes
        self.alternative_weights_ = groups.alternatives
        self.ranking_ = dense_ranks(groups.alternatives)
        return self

    def predict(self, X=None) -> np.ndarray:
        _require_fitted(self, "ranking_")
        return self.ranking_


class RobustSatisficingOrdinalPriority(BaseEstimator):
    """Satisficing layer: keep at least ``alpha`` of the optimal disparity
    and minimize the guaranteed violation rate under expert-rank drift."""

    def __init__(self, alpha: float = 0.9):
        self.alpha = alpha

    def fit(self, X, y=None):
        if isinstance(X, PrsInstance):
            # The estimator's alpha wins over whatever the instance carried.
            instance = PrsInstance(X.profile, X.table, X.expert_rank_intervals, self.alpha)
            rank_map = None
        else:
            pr = check_pr_instance(X)
            if isinstance(X, dict) and X.get("expert_rank_intervals") is not None:
                intervals = np.asarray(X["expert_rank_intervals"], dtype=float)
            else:
                nominal = np.asarray(pr.expert_ranks, dtype=float)
                intervals = np.column_stack([nominal, nominal])
            stage = solve_opa_pr(pr)
            instance = PrsInstance(stage.profile, stage.table, intervals, self.alpha)
            rank_map = pr.ranking_profile().rank_to_alternative()
        result = solve_opa_prs(instance, rank_map)
        self.result_ = result
        self.z_target_ = result.z_target
        self.eta_ = result.eta
        self.total_fragility_ = result.total_fragility
        self.fragility_phi_ = result.fragility_phi
        self.weights_ = result.solution.weights
        self.expert_weights_ = result.groups.experts
        self.attribute_weights_ = result.groups.attributes
        self.alternative_weights_ = result.groups.alternatives
        self.ranking_ = dense_ranks(result.groups.alternatives)
        return self

    def predict(self, X=None) -> np.ndarray:
        _require_fitted(self, "ranking_")
        return self.ranking_
