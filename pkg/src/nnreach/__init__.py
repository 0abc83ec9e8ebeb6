"""Interval reachability for feedforward networks with uncertain parameters."""
from .esip import analyze_esip, forecast, max_width_for_limit
from .interval import Interval, IntervalMatrix, IntervalVector
from .mm import analyze_mm
from .network import UncertainNetwork, load, random_network, save
from .oracle import check_soundness
from .result import ReachResult

__all__ = [
    "Interval", "IntervalMatrix", "IntervalVector", "UncertainNetwork", "ReachResult",
    "analyze_mm", "analyze_esip", "forecast", "max_width_for_limit",
    "random_network", "load", "save", "check_soundness",
]
