"""Mixed-monotonicity reachability for networks with interval parameters.

For every layer l and every partial network NN(k, l) ending there, the
Jacobian bounds with respect to u(k, l) are built recursively and the partial
network is bounded from two opposite vertices of its uncertainty box plus an
error term. The layer bound is the intersection over k.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import activations
from .interval import (
    EmptyIntersectionError,
    IntervalMatrix,
    IntervalVector,
    affine_image,
    imul,
    inflate,
    matmul,
)
from .network import UncertainNetwork, UncertaintyLayout, batch_forward
from .result import ReachResult


@dataclass
class JacobianBounds:
    J: IntervalMatrix
    layout: UncertaintyLayout

    def __post_init__(self):
        if self.J.cols != self.layout.dim:
            raise ValueError(f"Jacobian has {self.J.cols} columns, layout needs {self.layout.dim}")

    @property
    def nbytes(self) -> int:
        return self.J.lo.nbytes + self.J.hi.nbytes


def identity_seed(dims, k: int) -> JacobianBounds:
    """Derivative of x^{k-1} with respect to itself."""
    n = dims[k - 1]
    eye = np.eye(n)
    return JacobianBounds(IntervalMatrix(eye, eye, check=False), UncertaintyLayout(tuple(dims), k, k - 1))


def jacobian_step(prev: JacobianBounds, W: IntervalMatrix, x_prev: IntervalVector, phi_prime: IntervalVector) -> JacobianBounds:
    """Extend Jacobian bounds of NN(k, l-1) to NN(k, l).

    G = [W * J_prev, x_1 I, ..., x_m I, I] (blocks for u(k,l-1), vec(W), b),
    then row i of G is scaled by the derivative bounds of node i.
    """
    n_out, n_in = W.shape
    if prev.J.rows != n_in or x_prev.dim != n_in or phi_prime.dim != n_out:
        raise ValueError("dimension mismatch in jacobian_step")
    WJ = matmul(W, prev.J)
    eye = np.eye(n_out)
    g_lo = np.hstack([WJ.lo, np.kron(x_prev.lo[None, :], eye), eye])
    g_hi = np.hstack([WJ.hi, np.kron(x_prev.hi[None, :], eye), eye])
    j_lo, j_hi = imul(phi_prime.lo[:, None], phi_prime.hi[:, None], g_lo, g_hi)
    p = prev.layout
    return JacobianBounds(IntervalMatrix(j_lo, j_hi, check=False), UncertaintyLayout(p.dims, p.k, p.l + 1))


def vertex_selection(lo, hi, J: IntervalMatrix):
    """Per-row opposite vertices and error weights from the sign of the Jacobian center.

    Returns (xi_lo, xi_hi, alpha), each of shape (n_out, n_in).
    """
    neg = J.mid < 0  # J* = 0 goes to the non-negative branch
    xi_lo = np.where(neg, hi[None, :], lo[None, :])
    xi_hi = np.where(neg, lo[None, :], hi[None, :])
    alpha = np.where(neg, np.maximum(0.0, J.hi), np.minimum(0.0, J.lo))
    return xi_lo, xi_hi, alpha


def mm_bound(f, lo, hi, J: IntervalMatrix) -> IntervalVector:
    """Bound every output of ``f`` over the box [lo, hi] given Jacobian bounds ``J``.

    ``f`` maps a (B, n_in) batch of points to (B, n_out) outputs.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n_out = J.rows
    xi_lo, xi_hi, alpha = vertex_selection(lo, hi, J)
    vals = np.asarray(f(np.vstack([xi_lo, xi_hi])), dtype=float)
    rows = np.arange(n_out)
    f_lo = vals[rows, rows]
    f_hi = vals[n_out + rows, rows]
    err = np.einsum("ij,ij->i", alpha, xi_lo - xi_hi)
    if not (np.all(np.isfinite(f_lo)) and np.all(np.isfinite(f_hi)) and np.all(np.isfinite(err))):
        raise ValueError("non-finite evaluation of f at a vertex")
    return IntervalVector(f_lo - err, f_hi + err, check=False)


def partial_evaluator(layout: UncertaintyLayout, phi):
    def f(U):
        x, Ws, bs = layout.unpack_batch(U)
        return batch_forward(Ws, bs, x, phi)

    return f


def _meet(a: IntervalVector, b: IntervalVector, tol: float) -> IntervalVector:
    # crossings within tol are rounding noise between two sound enclosures of
    # the same set; keep the crossed pair as a (tiny) sound interval
    lo = np.maximum(a.lo, b.lo)
    hi = np.minimum(a.hi, b.hi)
    cross = lo > hi
    if np.any(cross):
        gap = lo - hi
        scale = 1.0 + np.maximum(np.abs(lo), np.abs(hi))
        bad = np.flatnonzero(cross & (gap > tol * scale))
        if bad.size:
            raise EmptyIntersectionError(f"empty intersection in component(s) {bad.tolist()}")
        lo, hi = np.where(cross, hi, lo), np.where(cross, lo, hi)
    return IntervalVector(lo, hi, check=False)


def analyze_mm(
    net: UncertainNetwork,
    partials: str = "all",
    keep_partials: bool = False,
    epsilon: float = 0.0,
    intersect_tol: float = 1e-12,
    return_jacobians: bool = False,
) -> ReachResult:
    """Mixed-monotonicity reachability of ``net``.

    partials="all" intersects every NN(k, l); partials="first" uses NN(1, l)
    only (a single application to each whole prefix).
    """
    if partials not in ("all", "first"):
        raise ValueError("partials must be 'all' or 'first'")
    act = net.act
    dims = net.dims
    t0 = time.perf_counter()
    xs = [net.input_bounds]
    jac: dict[int, JacobianBounds] = {}
    per_partial = {} if keep_partials else None
    jac_hist = {} if return_jacobians else None
    peak = 0
    for l in range(1, net.depth + 1):
        W, b, x_prev = net.weights[l - 1], net.biases[l - 1], xs[-1]
        pre = affine_image(W, x_prev, b)
        d_lo, d_hi = activations.derivative_bounds(act, pre.lo, pre.hi)
        dphi = IntervalVector(d_lo, d_hi, check=False)
        ks = range(1, l + 1) if partials == "all" else [1]
        for k in ks:
            if k == l:
                jac[k] = identity_seed(dims, k)
        bound = None
        for k in ks:
            jac[k] = jacobian_step(jac[k], W, x_prev, dphi)
            layout = jac[k].layout
            u_lo, u_hi = layout.bounds(net, xs[k - 1])
            xkl = mm_bound(partial_evaluator(layout, act.phi), u_lo, u_hi, jac[k].J)
            if keep_partials:
                per_partial[(k, l)] = xkl
            if return_jacobians:
                jac_hist[(k, l)] = jac[k]
            bound = xkl if bound is None else _meet(bound, xkl, intersect_tol)
        peak = max(peak, sum(jac[k].nbytes for k in ks))
        xs.append(bound)
    elapsed = time.perf_counter() - t0
    if epsilon:
        xs[-1] = inflate(xs[-1], epsilon)
    stats = {"time_s": elapsed, "mem_bytes": peak, "partials": partials}
    if return_jacobians:
        stats["jacobians"] = jac_hist
    return ReachResult("mm", xs, per_partial, stats)
