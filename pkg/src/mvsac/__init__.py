"""Exploratory mean-variance portfolio selection with entropy regularisation."""

from .curves import Curve, StepCurve
from .market import InvalidCorrelation, MarketModel, PricePanel, covariance_from, simulate_paths
from .mvcore import (
    MVProblem,
    Profitability,
    average_K,
    classical_allocation,
    combine_K,
    profitability,
    profitability_A,
)
from .exploratory import (
    ExploratoryConfig,
    GaussianPolicy,
    ValueQuadratic,
    evaluate_policy,
    gaussian_entropy,
    improve_policy,
    optimal_gaussian_policy,
    optimal_policy,
    optimal_value,
    policy_iterate,
)
from .estimation import EstimationWindow, mle_moments, shrink_inverse_covariance
from .learner import learning_study, run_online_sac
from .backtest import compute_metrics, ingest_prices

__version__ = "0.1.0"
