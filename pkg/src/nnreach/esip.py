"""Error-based symbolic interval propagation with uncertain weights and biases.

The symbolic equation is multilinear in the growing uncertainty vector
u^l = [x^0; vec(W^1); b^1; ...; vec(W^l); b^l]. It is stored densely, one
coefficient column per monomial, so its size follows

    n_S^0 = n_0 + 1,    n_S^l = n_l * n_{l-1} * n_S^{l-1} + n_l + 1,

and a memory forecast is checked before anything is allocated.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import activations
from .activations import Relaxation, UnsupportedActivation
from .interval import Interval, IntervalMatrix, IntervalVector, imul, inflate, matmul
from .network import UncertainNetwork, UncertaintyLayout
from .result import ReachResult

MATLAB_MAX_ELEMENTS = 2**48 - 1
INT64_MAX = 2**63 - 1
DEFAULT_BUDGET_BYTES = 8 * 2**30
BYTES_PER_ELEMENT = 8


class ResourceRefusal(RuntimeError):
    def __init__(self, message, forecast):
        super().__init__(message)
        self.forecast = forecast


@dataclass(frozen=True)
class MemoryForecast:
    dims: tuple
    per_layer_cols: tuple  # n_S^1 .. n_S^L
    peak_elements: int
    peak_bytes: int

    @property
    def representable(self) -> bool:
        return self.peak_elements <= INT64_MAX

    @property
    def within_element_limit(self) -> bool:
        return self.peak_elements <= MATLAB_MAX_ELEMENTS


def forecast(dims) -> MemoryForecast:
    dims = tuple(int(d) for d in dims)
    if len(dims) < 2 or any(d <= 0 for d in dims):
        raise ValueError(f"invalid dims {dims}")
    cols = dims[0] + 1
    per_layer = []
    peak = 0
    for l in range(1, len(dims)):
        cols = dims[l] * dims[l - 1] * cols + dims[l] + 1
        per_layer.append(cols)
        peak = max(peak, dims[l] * cols)
    return MemoryForecast(dims, tuple(per_layer), peak, peak * BYTES_PER_ELEMENT)


def _uniform_elements(n: int, L: int) -> int:
    return n * sum(n**i for i in range(2 * L + 2))


def max_width_for_limit(L: int, limit: int = MATLAB_MAX_ELEMENTS) -> int:
    """Largest uniform width n whose final symbolic equation fits in ``limit`` elements."""
    if L < 1:
        raise ValueError("L must be >= 1")
    if _uniform_elements(1, L) > limit:
        return 0
    lo, hi = 1, 2
    while _uniform_elements(hi, L) <= limit:
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if _uniform_elements(mid, L) <= limit:
            lo = mid
        else:
            hi = mid
    return lo


def admit(dims, budget_bytes: int = DEFAULT_BUDGET_BYTES, overhead: float = 2.0) -> MemoryForecast:
    """Raise ResourceRefusal unless the symbolic equation fits the budget."""
    fc = forecast(dims)
    if not fc.representable:
        raise ResourceRefusal(
            f"symbolic equation exceeds representable size ({fc.peak_elements} elements)", fc
        )
    if not fc.within_element_limit:
        raise ResourceRefusal(
            f"symbolic equation needs {fc.peak_elements:,} elements, above the 2^48-1 element limit", fc
        )
    if fc.peak_bytes * overhead > budget_bytes:
        raise ResourceRefusal(
            f"symbolic equation needs {fc.peak_bytes:,} bytes "
            f"(x{overhead:g} overhead) but the budget is {int(budget_bytes):,} bytes",
            fc,
        )
    return fc


@dataclass
class SymbolicEquation:
    """Rows are nodes, columns are monomials over u.

    ``monomials[c]`` holds the sorted variable indices of column c, padded
    with -1; an all-padding row is the constant column.
    """

    coeffs: np.ndarray
    monomials: np.ndarray
    const_col: int = field(default=-1)

    def __post_init__(self):
        if self.monomials.ndim != 2 or self.monomials.shape[0] != self.coeffs.shape[1]:
            raise ValueError("monomial table does not match coefficient columns")
        if self.const_col < 0:
            const = np.flatnonzero(np.all(self.monomials < 0, axis=1))
            if const.size != 1:
                raise ValueError(f"expected exactly one constant column, found {const.size}")
            self.const_col = int(const[0])

    @property
    def n_rows(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_cols(self) -> int:
        return self.coeffs.shape[1]

    @property
    def nbytes(self) -> int:
        return self.coeffs.nbytes + self.monomials.nbytes

    def monomial(self, c: int) -> list[int]:
        return [int(v) for v in self.monomials[c] if v >= 0]

    def evaluate(self, u) -> np.ndarray:
        """Point evaluation at a concrete uncertainty vector."""
        u = np.asarray(u, dtype=float)
        vals = np.where(self.monomials >= 0, u[np.maximum(self.monomials, 0)], 1.0).prod(axis=1)
        return self.coeffs @ vals


def initial_equation(n0: int) -> SymbolicEquation:
    coeffs = np.hstack([np.eye(n0), np.zeros((n0, 1))])
    monomials = np.vstack([np.arange(n0)[:, None], [[-1]]])
    return SymbolicEquation(coeffs, monomials, n0)


def empty_error(n: int) -> IntervalMatrix:
    return IntervalMatrix(np.zeros((n, 0)), np.zeros((n, 0)), check=False)


def affine_step(S: SymbolicEquation, E: IntervalMatrix, W: IntervalMatrix, b: IntervalVector, layout: UncertaintyLayout):
    """Push the symbolic equation and error through ``x -> W x + b`` of layer ``layout.l``.

    Columns are W-products ordered by (column j of W, row i of W, old column c),
    then one column per bias entry, then the constant column (zero until the
    next activation).
    """
    n_out, n_in = W.shape
    if S.n_rows != n_in or E.rows != n_in or b.dim != n_out:
        raise ValueError("dimension mismatch in affine_step")
    m = layout.l
    n_old = S.n_cols
    C4 = np.zeros((n_out, n_in, n_out, n_old))
    idx = np.arange(n_out)
    C4[idx, :, idx, :] = S.coeffs
    coeffs = np.hstack([C4.reshape(n_out, -1), np.eye(n_out), np.zeros((n_out, 1))])
    C4 = None

    deg = S.monomials.shape[1] + 1
    # layer-m W indices exceed every earlier variable, so appending keeps rows sorted
    w_vars = layout.offsets[("W", m)][0] + np.arange(n_in * n_out)  # column-major order j*n_out + i
    old = np.hstack([S.monomials, np.full((n_old, 1), -1, dtype=np.int64)])
    slot = (S.monomials >= 0).sum(axis=1)
    prod = np.broadcast_to(old, (n_in * n_out, n_old, deg)).copy()
    prod[:, np.arange(n_old), slot] = w_vars[:, None]
    prod = prod.reshape(-1, deg)
    b_vars = layout.offsets[("b", m)][0] + np.arange(n_out)
    tail = np.full((n_out + 1, deg), -1, dtype=np.int64)
    tail[:n_out, 0] = b_vars
    monomials = np.vstack([prod, tail])
    S_new = SymbolicEquation(coeffs, monomials, coeffs.shape[1] - 1)
    E_new = matmul(W, E)
    return S_new, E_new


def monomial_bounds(S: SymbolicEquation, u_lo, u_hi):
    """Interval of every monomial column, each variable taken independently."""
    m_lo = np.ones(S.n_cols)
    m_hi = np.ones(S.n_cols)
    for d in range(S.monomials.shape[1]):
        v = S.monomials[:, d]
        valid = v >= 0
        safe = np.maximum(v, 0)
        v_lo = np.where(valid, u_lo[safe], 1.0)
        v_hi = np.where(valid, u_hi[safe], 1.0)
        m_lo, m_hi = imul(m_lo, m_hi, v_lo, v_hi)
    return m_lo, m_hi


def _row_bounds(c, m_lo, m_hi):
    pos = np.maximum(c, 0.0)
    neg = c - pos
    return pos @ m_lo + neg @ m_hi, pos @ m_hi + neg @ m_lo


def eval_interval(S: SymbolicEquation, row: int, u_bounds: IntervalVector) -> Interval:
    m_lo, m_hi = monomial_bounds(S, u_bounds.lo, u_bounds.hi)
    lo, hi = _row_bounds(S.coeffs[row], m_lo, m_hi)
    return Interval(float(lo), float(hi))


def eval_bounds(S: SymbolicEquation, u_lo, u_hi):
    m_lo, m_hi = monomial_bounds(S, np.asarray(u_lo, float), np.asarray(u_hi, float))
    lo = np.empty(S.n_rows)
    hi = np.empty(S.n_rows)
    for i in range(S.n_rows):
        lo[i], hi[i] = _row_bounds(S.coeffs[i], m_lo, m_hi)
    return lo, hi


def error_offsets(E: IntervalMatrix):
    return np.where(E.lo < 0, E.lo, 0.0).sum(axis=1), np.where(E.hi > 0, E.hi, 0.0).sum(axis=1)


def pre_activation_bounds(S: SymbolicEquation, E: IntervalMatrix, i: int, u_bounds: IntervalVector) -> Interval:
    s = eval_interval(S, i, u_bounds)
    e_lo, e_hi = error_offsets(E)
    return Interval(s.lo + float(e_lo[i]), s.hi + float(e_hi[i]))


def activation_step(S: SymbolicEquation, i: int, r: Relaxation):
    """Replace row i by the lower relaxation applied to it; return (row, error)."""
    S.coeffs[i] *= r.slope
    S.coeffs[i, S.const_col] += r.intercept_lo
    return S.coeffs[i], activations.relaxation_error(r)


def prune_zero_columns(S: SymbolicEquation) -> SymbolicEquation:
    keep = np.any(S.coeffs != 0, axis=0)
    keep[S.const_col] = True
    const = int(np.count_nonzero(keep[: S.const_col]))
    return SymbolicEquation(S.coeffs[:, keep], S.monomials[keep], const)


def analyze_esip(
    net: UncertainNetwork,
    budget_bytes: int = DEFAULT_BUDGET_BYTES,
    overhead: float = 2.0,
    prune: bool = False,
    epsilon: float = 0.0,
) -> ReachResult:
    act = net.act
    if not (act.monotone_increasing and act.has_relaxer):
        raise UnsupportedActivation(f"activation unsupported by ESIP: {act.name}")
    fc = admit(net.dims, budget_bytes, overhead)

    t0 = time.perf_counter()
    L = net.depth
    S = initial_equation(net.dims[0])
    E = empty_error(net.dims[0])
    u_lo, u_hi = net.input_bounds.lo, net.input_bounds.hi
    xs = [net.input_bounds]
    pre_bounds = []
    n_cols = []
    impl_peak = 0
    for l in range(1, L + 1):
        W, b = net.weights[l - 1], net.biases[l - 1]
        layout = UncertaintyLayout(net.dims, 1, l)
        u_lo = np.concatenate([u_lo, W.lo.ravel(order="F"), b.lo])
        u_hi = np.concatenate([u_hi, W.hi.ravel(order="F"), b.hi])
        S, E = affine_step(S, E, W, b, layout)
        n_cols.append(S.n_cols)
        impl_peak = max(impl_peak, S.nbytes + E.lo.nbytes + E.hi.nbytes)

        s_lo, s_hi = eval_bounds(S, u_lo, u_hi)
        e_lo, e_hi = error_offsets(E)
        pre = IntervalVector(s_lo + e_lo, s_hi + e_hi, check=False)
        pre_bounds.append(pre)
        xs.append(IntervalVector(act.phi(pre.lo), act.phi(pre.hi), check=False))
        if l == L:
            break

        errs = np.zeros(W.rows)
        slopes = np.zeros(W.rows)
        for i in range(W.rows):
            r = activations.relax(act, pre[i])
            _, errs[i] = activation_step(S, i, r)
            slopes[i] = r.slope
        # earlier error terms of node i pass through the same slope as its equation
        E_lo = np.hstack([E.lo * slopes[:, None], np.diag(errs)])
        E_hi = np.hstack([E.hi * slopes[:, None], np.diag(errs)])
        E = IntervalMatrix(E_lo, E_hi, check=False)
        if prune:
            S = prune_zero_columns(S)

    elapsed = time.perf_counter() - t0
    if epsilon:
        xs[-1] = inflate(xs[-1], epsilon)
    stats = {
        "time_s": elapsed,
        "mem_bytes": fc.peak_bytes,
        "impl_bytes": impl_peak,
        "forecast": fc,
        "n_cols": n_cols,
        "pre_activation": pre_bounds,
    }
    return ReachResult("esip", xs, None, stats)
