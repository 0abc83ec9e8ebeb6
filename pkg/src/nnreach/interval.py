"""Interval scalars, vectors and matrices backed by numpy lower/upper arrays.

All arithmetic uses plain round-to-nearest floating point. Callers that want a
guard against rounding can inflate final results outward with ``inflate``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class EmptyIntersectionError(ValueError):
    pass


@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise ValueError(f"non-finite interval bounds [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise ValueError(f"inverted bounds [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def __contains__(self, x) -> bool:
        return self.lo <= x <= self.hi

    def __add__(self, other: Interval) -> Interval:
        return Interval(self.lo + other.lo, self.hi + other.hi)

    def __mul__(self, other: Interval) -> Interval:
        return mul_intervals(self, other)

    def __iter__(self):
        yield self.lo
        yield self.hi


def make_interval(lo: float, hi: float) -> Interval:
    return Interval(float(lo), float(hi))


def mul_intervals(a: Interval, b: Interval) -> Interval:
    p = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    return Interval(min(p), max(p))


def imul(alo, ahi, blo, bhi):
    """Elementwise (broadcasting) interval product on raw bound arrays."""
    p1 = alo * blo
    p2 = alo * bhi
    p3 = ahi * blo
    p4 = ahi * bhi
    lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
    hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
    return lo, hi


class IntervalArray:
    """Elementwise interval array. Use the vector/matrix subclasses."""

    ndim: int = -1

    def __init__(self, lo, hi=None, *, check: bool = True):
        lo = np.array(lo, dtype=float)
        hi = lo.copy() if hi is None else np.array(hi, dtype=float)
        if lo.shape != hi.shape:
            raise ValueError(f"bound shapes differ: {lo.shape} vs {hi.shape}")
        if self.ndim >= 0 and lo.ndim != self.ndim:
            raise ValueError(f"{type(self).__name__} needs {self.ndim}-d bounds, got shape {lo.shape}")
        if check:
            if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
                raise ValueError("non-finite interval bounds")
            if np.any(lo > hi):
                raise ValueError("inverted bounds")
        lo.setflags(write=False)
        hi.setflags(write=False)
        self.lo = lo
        self.hi = hi

    @property
    def shape(self):
        return self.lo.shape

    @property
    def mid(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def rad(self) -> np.ndarray:
        return 0.5 * (self.hi - self.lo)

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, idx):
        lo, hi = self.lo[idx], self.hi[idx]
        if np.ndim(lo) == 0:
            return Interval(float(lo), float(hi))
        return as_interval_array(lo, hi)

    def __eq__(self, other):
        if not isinstance(other, IntervalArray):
            return NotImplemented
        return np.array_equal(self.lo, other.lo) and np.array_equal(self.hi, other.hi)

    __hash__ = None

    def contains(self, x, slack: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.lo - slack <= x) and np.all(x <= self.hi + slack))

    def subset_of(self, other: IntervalArray, slack: float = 0.0) -> bool:
        return bool(np.all(other.lo - slack <= self.lo) and np.all(self.hi <= other.hi + slack))

    def __repr__(self):
        return f"{type(self).__name__}(lo={self.lo.tolist()}, hi={self.hi.tolist()})"


class IntervalVector(IntervalArray):
    ndim = 1

    @property
    def dim(self) -> int:
        return self.lo.shape[0]

    @property
    def elems(self) -> list[Interval]:
        return [Interval(float(a), float(b)) for a, b in zip(self.lo, self.hi)]


class IntervalMatrix(IntervalArray):
    ndim = 2

    @property
    def rows(self) -> int:
        return self.lo.shape[0]

    @property
    def cols(self) -> int:
        return self.lo.shape[1]


def as_interval_array(lo, hi=None, check: bool = True) -> IntervalArray:
    nd = np.ndim(lo)
    cls = {1: IntervalVector, 2: IntervalMatrix}.get(nd, IntervalArray)
    return cls(lo, hi, check=check)


def point(x) -> IntervalArray:
    return as_interval_array(x, x)


def _matmul_numpy(alo, ahi, blo, bhi, chunk_elems: int = 1 << 16):
    # entry (i,j) = sum_k [A_ik]*[B_kj]; broadcast over k in cache-sized column chunks of B
    m, n = alo.shape
    p = blo.shape[1]
    lo = np.empty((m, p))
    hi = np.empty((m, p))
    step = max(1, chunk_elems // max(1, m * n))
    a_lo = alo[:, :, None]
    a_hi = ahi[:, :, None]
    for s in range(0, p, step):
        e = min(p, s + step)
        plo, phi = imul(a_lo, a_hi, blo[None, :, s:e], bhi[None, :, s:e])
        lo[:, s:e] = plo.sum(axis=1)
        hi[:, s:e] = phi.sum(axis=1)
    return lo, hi


def _matmul_loops(alo, ahi, blo, bhi, lo, hi):
    m, n = alo.shape
    p = blo.shape[1]
    for i in range(m):
        for k in range(n):
            al = alo[i, k]
            ah = ahi[i, k]
            if al == 0.0 and ah == 0.0:
                continue
            for j in range(p):
                bl = blo[k, j]
                bh = bhi[k, j]
                p1 = al * bl
                p2 = al * bh
                p3 = ah * bl
                p4 = ah * bh
                lo[i, j] += min(min(p1, p2), min(p3, p4))
                hi[i, j] += max(max(p1, p2), max(p3, p4))


try:
    import numba
except ImportError:  # pragma: no cover
    _kernel = None
else:
    _kernel = numba.njit(cache=True)(_matmul_loops)


def _matmul_bounds(alo, ahi, blo, bhi):
    """Exact endpoint interval product of two bound-matrix pairs."""
    if _kernel is None:  # pragma: no cover
        return _matmul_numpy(alo, ahi, blo, bhi)
    lo = np.zeros((alo.shape[0], blo.shape[1]))
    hi = np.zeros_like(lo)
    c = np.ascontiguousarray
    _kernel(c(alo, dtype=float), c(ahi, dtype=float), c(blo, dtype=float), c(bhi, dtype=float), lo, hi)
    return lo, hi


def warmup() -> None:
    """Load or compile the product kernel so later timings exclude it."""
    z = np.zeros((1, 1))
    r = z.copy()
    r.flags.writeable = False  # interval bounds are read-only, a separate specialisation
    _matmul_bounds(z, z, z, z)
    _matmul_bounds(r, r, r, r)


def matmul(A: IntervalMatrix, B: IntervalArray) -> IntervalArray:
    """Sound interval matrix product; ``B`` may be a matrix or a vector."""
    if A.cols != B.shape[0]:
        raise ValueError(f"dimension mismatch: {A.shape} x {B.shape}")
    if B.lo.ndim == 1:
        lo, hi = imul(A.lo, A.hi, B.lo[None, :], B.hi[None, :])
        return IntervalVector(lo.sum(axis=1), hi.sum(axis=1), check=False)
    lo, hi = _matmul_bounds(A.lo, A.hi, B.lo, B.hi)
    return IntervalMatrix(lo, hi, check=False)


def affine_image(W: IntervalMatrix, x: IntervalVector, b: IntervalVector) -> IntervalVector:
    if W.cols != x.dim or W.rows != b.dim:
        raise ValueError(f"dimension mismatch: W {W.shape}, x {x.dim}, b {b.dim}")
    Wx = matmul(W, x)
    return IntervalVector(Wx.lo + b.lo, Wx.hi + b.hi, check=False)


def intersect(a: IntervalArray, b: IntervalArray) -> IntervalArray:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    lo = np.maximum(a.lo, b.lo)
    hi = np.minimum(a.hi, b.hi)
    bad = np.flatnonzero(lo > hi)
    if bad.size:
        raise EmptyIntersectionError(f"empty intersection in component(s) {bad.tolist()}")
    return as_interval_array(lo, hi, check=False)


def hull(a: IntervalArray, b: IntervalArray) -> IntervalArray:
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return as_interval_array(np.minimum(a.lo, b.lo), np.maximum(a.hi, b.hi), check=False)


def center(A: IntervalArray) -> np.ndarray:
    return A.mid


def width(v: IntervalArray) -> float:
    d = np.ravel(v.hi - v.lo)
    m = float(d.max(initial=0.0))
    if m == 0.0 or not np.isfinite(m):
        return m
    return m * float(np.linalg.norm(d / m))  # scaled to avoid underflow


def inflate(v: IntervalArray, eps: float) -> IntervalArray:
    if eps < 0:
        raise ValueError("inflation must be nonnegative")
    if eps == 0:
        return v
    return as_interval_array(v.lo - eps, v.hi + eps, check=False)
