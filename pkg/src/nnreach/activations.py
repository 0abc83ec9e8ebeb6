"""Activation functions with derivative extremizers and parallel-line relaxations.

Each registered activation carries the global argmin ``z_min`` and argmax
``z_max`` of its derivative. The derivative must be non-increasing up to
``z_min``, non-decreasing between ``z_min`` and ``z_max`` and non-increasing
afterwards; local derivative bounds on any interval then follow from a couple
of evaluations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.special import expit

from .interval import Interval, IntervalArray, IntervalVector

# root of 2 + x(1 - 2 sigmoid(x)) = 0, where silu'' vanishes
SILU_DERIV_ARGMIN = -2.3993572805154677


class UnsupportedActivation(ValueError):
    pass


@dataclass(frozen=True)
class Relaxation:
    """Lower line ``slope*x + intercept_lo``, upper line ``slope*x + intercept_hi``."""

    slope: float
    intercept_lo: float
    intercept_hi: float

    def lower(self, x):
        return self.slope * np.asarray(x) + self.intercept_lo

    def upper(self, x):
        return self.slope * np.asarray(x) + self.intercept_hi


@dataclass(frozen=True)
class ActivationSpec:
    name: str
    phi: Callable
    dphi: Callable
    z_min: float
    z_max: float
    monotone_increasing: bool
    # maps (lo, hi) -> candidate points where dphi == slope, given the slope
    stationary_points: Optional[Callable[[float], list]] = None

    @property
    def has_relaxer(self) -> bool:
        return self.stationary_points is not None


def _relu(x):
    return np.maximum(x, 0.0)


def _drelu(x):
    return np.heaviside(x, 0.0)


def _relu_stationary(a):
    # chord slopes strictly between 0 and 1 only arise across the kink
    return [0.0]


def _dsigmoid(x):
    s = expit(x)
    return s * (1.0 - s)


def _sigmoid_stationary(a):
    if a <= 0.0:
        return []
    disc = max(0.0, 1.0 - 4.0 * a)
    r = math.sqrt(disc)
    s_lo, s_hi = 0.5 * (1.0 - r), 0.5 * (1.0 + r)
    if s_lo <= 0.0:
        return []
    x = math.log(s_hi / s_lo)
    return [-x, x]


def _dtanh(x):
    t = np.tanh(x)
    return 1.0 - t * t


def _tanh_stationary(a):
    if a <= 0.0:
        return []
    t = math.sqrt(max(0.0, 1.0 - a))
    if t >= 1.0:
        return []
    x = math.atanh(t)
    return [-x, x]


def _silu(x):
    x = np.asarray(x, dtype=float)
    return x * expit(x)


def _dsilu(x):
    x = np.asarray(x, dtype=float)
    s = expit(x)
    with np.errstate(invalid="ignore"):
        d = s * (1.0 + x * (1.0 - s))
    return np.where(np.isinf(x), (x > 0).astype(float), d)


_REGISTRY: dict[str, ActivationSpec] = {}


def register(spec: ActivationSpec, check: bool = True) -> ActivationSpec:
    """Add an activation to the registry, spot-checking the derivative shape.

    The check samples 10^3 points over [-50, 50]; a derivative that violates
    the three-piece monotonicity between samples is not detected.
    """
    if check:
        check_derivative_shape(spec)
    _REGISTRY[spec.name] = spec
    return spec


def check_derivative_shape(spec: ActivationSpec, n: int = 1000, span: float = 50.0, tol: float = 1e-12):
    grid = np.linspace(-span, span, n)
    extra = [z for z in (spec.z_min, spec.z_max) if math.isfinite(z)]
    grid = np.unique(np.concatenate([grid, extra]))
    d = np.asarray(spec.dphi(grid), dtype=float)
    if not np.all(np.isfinite(d)):
        raise ValueError(f"{spec.name}: derivative not finite on sample grid")
    if spec.z_min > spec.z_max:
        raise ValueError(f"{spec.name}: z_min > z_max")
    seg1 = grid <= spec.z_min
    seg2 = (grid >= spec.z_min) & (grid <= spec.z_max)
    seg3 = grid >= spec.z_max
    for mask, sign in ((seg1, -1), (seg2, 1), (seg3, -1)):
        steps = np.diff(d[mask])
        if np.any(sign * steps < -tol):
            raise ValueError(f"{spec.name}: derivative is not piecewise monotone around z_min/z_max")
    dmin = spec.dphi(np.array([spec.z_min]))[0]
    dmax = spec.dphi(np.array([spec.z_max]))[0]
    if np.any(d < dmin - tol) or np.any(d > dmax + tol):
        raise ValueError(f"{spec.name}: z_min/z_max are not the global extremizers of the derivative")
    if spec.monotone_increasing and np.any(d < -tol):
        raise ValueError(f"{spec.name}: flagged monotone but derivative is negative somewhere")


def builtin(name: str) -> ActivationSpec:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown activation {name!r}; known: {sorted(_REGISTRY)}") from None


def get(act) -> ActivationSpec:
    return act if isinstance(act, ActivationSpec) else builtin(act)


def names() -> list[str]:
    return sorted(_REGISTRY)


register(ActivationSpec("relu", _relu, _drelu, -math.inf, math.inf, True, _relu_stationary))
register(ActivationSpec("sigmoid", expit, _dsigmoid, -math.inf, 0.0, True, _sigmoid_stationary))
register(ActivationSpec("tanh", np.tanh, _dtanh, -math.inf, 0.0, True, _tanh_stationary))
register(ActivationSpec("silu", _silu, _dsilu, SILU_DERIV_ARGMIN, -SILU_DERIV_ARGMIN, False, None))


def derivative_bounds(spec: ActivationSpec, lo, hi):
    """Vectorised local bounds of the derivative over ``[lo, hi]`` (arrays)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    dlo = np.asarray(spec.dphi(lo), dtype=float)
    dhi = np.asarray(spec.dphi(hi), dtype=float)
    lower = np.minimum(dlo, dhi)
    upper = np.maximum(dlo, dhi)
    # infinite extremizers never fall inside a finite interval
    if math.isfinite(spec.z_min):
        inside = (lo <= spec.z_min) & (spec.z_min <= hi)
        lower = np.where(inside, float(spec.dphi(np.array([spec.z_min]))[0]), lower)
    if math.isfinite(spec.z_max):
        inside = (lo <= spec.z_max) & (spec.z_max <= hi)
        upper = np.where(inside, float(spec.dphi(np.array([spec.z_max]))[0]), upper)
    return lower, upper


def local_derivative_bounds(spec, x):
    """Bounds on the derivative over an ``Interval`` or ``IntervalVector``."""
    spec = get(spec)
    if isinstance(x, Interval):
        lo, hi = derivative_bounds(spec, np.array([x.lo]), np.array([x.hi]))
        return Interval(float(lo[0]), float(hi[0]))
    if isinstance(x, IntervalArray):
        lo, hi = derivative_bounds(spec, x.lo, x.hi)
        return IntervalVector(lo, hi, check=False)
    raise TypeError(f"expected Interval or IntervalVector, got {type(x).__name__}")


def _scalar(f, x) -> float:
    return float(np.asarray(f(np.array([x], dtype=float)))[0])


def relax(spec, x: Interval) -> Relaxation:
    """Parallel-line relaxation with the chord slope over ``x``.

    The intercepts are the min and max of ``phi(t) - slope*t`` on the interval,
    found among the endpoints and the interior points where the derivative
    equals the slope.
    """
    spec = get(spec)
    if not spec.monotone_increasing or not spec.has_relaxer:
        raise UnsupportedActivation(f"activation unsupported by ESIP: {spec.name}")
    lo, hi = float(x.lo), float(x.hi)
    if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
        raise ValueError(f"relaxation needs a finite, ordered interval, got [{lo}, {hi}]")
    if lo == hi:
        a = _scalar(spec.dphi, lo)
        c = _scalar(spec.phi, lo) - a * lo
        return Relaxation(a, c, c)
    flo, fhi = _scalar(spec.phi, lo), _scalar(spec.phi, hi)
    a = (fhi - flo) / (hi - lo)
    cands = [lo, hi] + [t for t in spec.stationary_points(a) if lo < t < hi]
    t = np.array(cands)
    g = np.asarray(spec.phi(t), dtype=float) - a * t
    return Relaxation(a, float(g.min()), float(g.max()))


def relaxation_error(r: Relaxation) -> float:
    """Largest vertical gap between the two relaxation lines."""
    return max(0.0, r.intercept_hi - r.intercept_lo)
