"""Reward estimation from pairwise preferences that is robust to near-duplicate alternatives.

Two estimators share one objective: the regularized Bradley-Terry-Luce MLE
(unit weights) and the Voronoi-weighted MLE, which weights every alternative
by the share of the alternative space closest to it.
"""

from .core import (
    AlternativeSet,
    AnnotatorType,
    LinearReward,
    Population,
    PreferenceRecord,
    RewardVector,
    TabularReward,
    WinRateMatrix,
    annotator_reward,
    btl_win_prob,
    empirical_matrix,
    population_win_prob,
    representative_matrix,
    sample_comparison,
    sample_dataset,
)
from .errors import (
    IncompleteCoverageError,
    InvalidArgumentError,
    NonConvergenceError,
    PrefAggError,
    UnknownAlternativeError,
    UnsupportedCombinationError,
)
from .solver import SolveReport, SolverConfig, gradient, objective, reward_bound, solve
from .voronoi import (
    ProjectionResult,
    SpaceBox,
    WeightVector,
    estimate_weights,
    grid_weights,
    integral_objective_estimate,
    project,
    unit_weights,
)
from .winrate import (
    ScoreVector,
    average_win_rate,
    borda_count,
    m_estimator_residual,
    model_win_rate,
    ranking_consistency,
    weighted_average_win_rate,
)

__version__ = "0.1.0"

__all__ = [
    "AlternativeSet",
    "AnnotatorType",
    "IncompleteCoverageError",
    "InvalidArgumentError",
    "LinearReward",
    "NonConvergenceError",
    "Population",
    "PrefAggError",
    "PreferenceRecord",
    "ProjectionResult",
    "RewardVector",
    "ScoreVector",
    "SolveReport",
    "SolverConfig",
    "SpaceBox",
    "TabularReward",
    "UnknownAlternativeError",
    "UnsupportedCombinationError",
    "WeightVector",
    "WinRateMatrix",
    "annotator_reward",
    "average_win_rate",
    "borda_count",
    "btl_win_prob",
    "empirical_matrix",
    "estimate_weights",
    "gradient",
    "grid_weights",
    "integral_objective_estimate",
    "m_estimator_residual",
    "model_win_rate",
    "objective",
    "population_win_prob",
    "project",
    "ranking_consistency",
    "representative_matrix",
    "reward_bound",
    "sample_comparison",
    "sample_dataset",
    "solve",
    "unit_weights",
    "weighted_average_win_rate",
]
