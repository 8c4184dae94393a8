"""Optimal retirement decumulation with the Annuity Family of payment vehicles."""

from .annuity import LoadingPolicy, PricingResult, Strategy, Vehicle, VarianceBasis, price
from .lifetimes import LambdaSamples, MortalityParams, sample_lambdas
from .market import MarketParams, perpetuity_law, portfolio_law, weight_bounds
from .optimizer import (
    CellSurfaces,
    DecisionMap,
    GridSpec,
    Optimum,
    RiskAppetite,
    evaluate_all,
    evaluate_surfaces,
    find_optimum,
    sweep_appetites,
    wealth_allocation,
)
from .config import RunConfig, load_config
from .outcomes import shortfall_probability, xi_moments
from .params import ModelParams

__all__ = [
    "CellSurfaces", "DecisionMap", "GridSpec", "LambdaSamples", "LoadingPolicy", "MarketParams",
    "ModelParams", "MortalityParams", "Optimum", "PricingResult", "RiskAppetite", "RunConfig", "Strategy",
    "VarianceBasis", "Vehicle", "evaluate_all", "evaluate_surfaces", "find_optimum", "load_config",
    "perpetuity_law", "portfolio_law", "price", "sample_lambdas", "shortfall_probability",
    "sweep_appetites", "wealth_allocation", "weight_bounds", "xi_moments",
]
