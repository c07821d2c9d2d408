"""Distribution market clearing with nodal prices and settlement."""

from .clearing import ClearingInput, ClearingResult, clear, grid_following, grid_independent
from .model import CustomerBid, FixedLoadSeries, Line, Network, TlmpSeries, AssignedPowerSeries
from .settlement import settle

__all__ = [
    "AssignedPowerSeries",
    "ClearingInput",
    "ClearingResult",
    "CustomerBid",
    "FixedLoadSeries",
    "Line",
    "Network",
    "TlmpSeries",
    "clear",
    "grid_following",
    "grid_independent",
    "settle",
]

__version__ = "0.1.0"
