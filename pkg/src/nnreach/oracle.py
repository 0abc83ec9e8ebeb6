"""Monte Carlo falsification of interval over-approximations."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .interval import IntervalVector
from .network import UncertainNetwork, sample_outputs


@dataclass(frozen=True)
class SoundnessReport:
    samples: int
    violations: int  # samples with at least one component outside the bounds
    worst_excess: float
    slack: float

    @property
    def sound(self) -> bool:
        return self.violations == 0

    def __str__(self):
        return f"samples: {self.samples}  violations: {self.violations}  worst excess: {self.worst_excess:.3g}"


def excess(Y: np.ndarray, bounds: IntervalVector) -> np.ndarray:
    """Per-sample distance outside ``bounds`` (0 when contained)."""
    below = np.maximum(bounds.lo - Y, 0.0)
    above = np.maximum(Y - bounds.hi, 0.0)
    return np.maximum(below, above).max(axis=1)


def check_soundness(net: UncertainNetwork, result, samples: int = 10_000, seed=0, slack: float = 1e-9) -> SoundnessReport:
    bounds = result.output if hasattr(result, "output") else result
    Y = sample_outputs(net, samples, seed=seed)
    ex = excess(Y, bounds)
    return SoundnessReport(samples, int(np.count_nonzero(ex > slack)), float(ex.max(initial=0.0)), slack)


def shrink(bounds: IntervalVector, fraction: float) -> IntervalVector:
    """Shrink every component around its center; used to test the oracle itself."""
    r = bounds.rad * (1.0 - fraction)
    return IntervalVector(bounds.mid - r, bounds.mid + r, check=False)
