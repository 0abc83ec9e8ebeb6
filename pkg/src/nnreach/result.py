from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .interval import IntervalVector, width


@dataclass
class ReachResult:
    """Per-layer bounds; ``per_layer[0]`` is the input box, ``per_layer[l]`` layer l."""

    engine: str
    per_layer: list
    per_partial: Optional[dict] = None  # (k, l) -> IntervalVector
    stats: dict = field(default_factory=dict)

    @property
    def output(self) -> IntervalVector:
        return self.per_layer[-1]

    @property
    def width(self) -> float:
        return width(self.output)
