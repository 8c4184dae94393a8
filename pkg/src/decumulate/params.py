"""The single calibrated input record shared by pricing, outcomes and the optimizer."""

from __future__ import annotations

from dataclasses import dataclass, field

from .annuity import LoadingPolicy
from .lifetimes import MortalityParams
from .market import MarketParams


@dataclass(frozen=True)
class ModelParams:
    """Market, mortality, loading and plan inputs.

    ``c`` is the constant real consumption rate as a fraction of initial wealth.
    """

    market: MarketParams = field(default_factory=MarketParams)
    mortality: MortalityParams = field(default_factory=MortalityParams)
    loading: LoadingPolicy = field(default_factory=LoadingPolicy)
    c: float = 0.052

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("consumption rate c must be positive")

    @property
    def lam(self) -> float:
        return self.mortality.lam
