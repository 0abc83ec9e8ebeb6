"""Feedforward networks with interval-valued inputs, weights and biases.

Layers are indexed 1..L as in ``x^l = phi(W^l x^{l-1} + b^l)``; Python lists
hold layer ``l`` at position ``l - 1``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import activations
from .interval import IntervalMatrix, IntervalVector


class NetworkFormatError(ValueError):
    pass


@dataclass(frozen=True)
class UncertainNetwork:
    dims: tuple
    weights: list  # IntervalMatrix per layer, shape (n_l, n_{l-1})
    biases: list  # IntervalVector per layer
    activation: str
    input_bounds: IntervalVector

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        object.__setattr__(self, "dims", dims)
        if len(dims) < 2 or any(d <= 0 for d in dims):
            raise ValueError(f"dims must hold at least two positive integers, got {dims}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("need one weight matrix and one bias vector per layer")
        if self.input_bounds.shape != (dims[0],):
            raise ValueError(f"input bounds shape {self.input_bounds.shape} != ({dims[0]},)")
        for l, (W, b) in enumerate(zip(self.weights, self.biases), start=1):
            if W.shape != (dims[l], dims[l - 1]):
                raise ValueError(f"layer {l}: W shape {W.shape} != {(dims[l], dims[l - 1])}")
            if b.shape != (dims[l],):
                raise ValueError(f"layer {l}: b shape {b.shape} != ({dims[l]},)")

    @property
    def depth(self) -> int:
        return len(self.dims) - 1

    @property
    def act(self) -> activations.ActivationSpec:
        return activations.builtin(self.activation)

    def center(self) -> "ConcreteNetwork":
        return ConcreteNetwork([W.mid for W in self.weights], [b.mid for b in self.biases])


@dataclass
class ConcreteNetwork:
    weights: list
    biases: list

    @property
    def dims(self) -> tuple:
        return (self.weights[0].shape[1],) + tuple(W.shape[0] for W in self.weights)

    @property
    def depth(self) -> int:
        return len(self.weights)


def forward(net: ConcreteNetwork, x0, act) -> np.ndarray:
    return partial_forward(net, 1, net.depth, x0, act)


def partial_forward(net: ConcreteNetwork, k: int, l: int, x_in, act) -> np.ndarray:
    """Evaluate layers k..l (1-based, inclusive) on ``x_in``."""
    if not 1 <= k <= l <= net.depth:
        raise ValueError(f"invalid layer range k={k}, l={l} for depth {net.depth}")
    phi = activations.get(act).phi
    x = np.asarray(x_in, dtype=float)
    if x.shape != (net.weights[k - 1].shape[1],):
        raise ValueError(f"input length {x.shape} does not match layer {k} width")
    for W, b in zip(net.weights[k - 1 : l], net.biases[k - 1 : l]):
        x = phi(W @ x + b)
    return x


def batch_forward(weights, biases, x, phi) -> np.ndarray:
    """Forward pass for a batch of networks.

    weights[m] has shape (B, n_out, n_in) or (n_out, n_in); x has shape (B, n_in).
    """
    for W, b in zip(weights, biases):
        if W.ndim == 3:
            x = phi(np.einsum("bij,bj->bi", W, x) + b)
        else:
            x = phi(x @ W.T + b)
    return x


@dataclass(frozen=True)
class UncertaintyLayout:
    """Index map of u(k,l) = [x^{k-1}; vec(W^k); b^k; ...; vec(W^l); b^l].

    vec() is column-major: column j of W contributes W[0,j]..W[n-1,j].
    ``l = k - 1`` is allowed and describes the bare input x^{k-1}.
    """

    dims: tuple
    k: int
    l: int
    offsets: dict = field(init=False, compare=False)
    dim: int = field(init=False)

    def __post_init__(self):
        if not (1 <= self.k <= self.l + 1 and self.l <= len(self.dims) - 1):
            raise ValueError(f"invalid layer range k={self.k}, l={self.l}")
        offsets = {"x": (0, self.dims[self.k - 1])}
        pos = self.dims[self.k - 1]
        for m in range(self.k, self.l + 1):
            nW = self.dims[m] * self.dims[m - 1]
            offsets[("W", m)] = (pos, pos + nW)
            pos += nW
            offsets[("b", m)] = (pos, pos + self.dims[m])
            pos += self.dims[m]
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "dim", pos)

    def slice(self, key) -> slice:
        return slice(*self.offsets[key])

    def w_index(self, m: int, i: int, j: int) -> int:
        """Position of W^m[i, j] (0-based i, j) inside u."""
        return self.offsets[("W", m)][0] + j * self.dims[m] + i

    def pack(self, x_in, weights, biases) -> np.ndarray:
        x_in = np.asarray(x_in, dtype=float)
        if x_in.shape != (self.dims[self.k - 1],) or len(weights) != self.l - self.k + 1:
            raise ValueError("shape mismatch between data and layout")
        parts = [x_in]
        for m, W, b in zip(range(self.k, self.l + 1), weights, biases):
            W = np.asarray(W, dtype=float)
            b = np.asarray(b, dtype=float)
            if W.shape != (self.dims[m], self.dims[m - 1]) or b.shape != (self.dims[m],):
                raise ValueError(f"layer {m}: shape mismatch between data and layout")
            parts += [W.ravel(order="F"), b]
        return np.concatenate(parts)

    def unpack(self, u):
        u = np.asarray(u, dtype=float)
        if u.shape != (self.dim,):
            raise ValueError(f"vector length {u.shape} != layout dim {self.dim}")
        x, Ws, bs = self.unpack_batch(u[None, :])
        return x[0], [W[0] for W in Ws], [b[0] for b in bs]

    def unpack_batch(self, U):
        """Split a (B, dim) array into inputs (B, n), weights (B, n_m, n_{m-1}), biases."""
        B = U.shape[0]
        x = U[:, self.slice("x")]
        Ws, bs = [], []
        for m in range(self.k, self.l + 1):
            w = U[:, self.slice(("W", m))].reshape(B, self.dims[m - 1], self.dims[m])
            Ws.append(w.transpose(0, 2, 1))
            bs.append(U[:, self.slice(("b", m))])
        return x, Ws, bs

    def bounds(self, net: UncertainNetwork, x_in: IntervalVector):
        """Lower/upper vectors of u(k,l) given bounds on the partial network input."""
        Ws = net.weights[self.k - 1 : self.l]
        bs = net.biases[self.k - 1 : self.l]
        lo = self.pack(x_in.lo, [W.lo for W in Ws], [b.lo for b in bs])
        hi = self.pack(x_in.hi, [W.hi for W in Ws], [b.hi for b in bs])
        return lo, hi


def pack(dims, k, l, x_in, weights, biases) -> np.ndarray:
    return UncertaintyLayout(tuple(dims), k, l).pack(x_in, weights, biases)


def unpack(layout: UncertaintyLayout, u):
    return layout.unpack(u)


def _rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def _uniform(rng, lo, hi, size=None):
    # clip guards against lo + (hi-lo)*u rounding one ulp past hi
    return np.clip(rng.uniform(lo, hi, size=size), lo, hi)


def sample(net: UncertainNetwork, seed=None):
    """Draw one concrete network and input uniformly from the uncertainty box."""
    rng = _rng(seed)
    Ws = [_uniform(rng, W.lo, W.hi) for W in net.weights]
    bs = [_uniform(rng, b.lo, b.hi) for b in net.biases]
    x0 = _uniform(rng, net.input_bounds.lo, net.input_bounds.hi)
    return ConcreteNetwork(Ws, bs), x0


def sample_outputs(net: UncertainNetwork, count: int, seed=None, batch: int = 1000) -> np.ndarray:
    """Outputs of ``count`` uniformly sampled (network, input) pairs, shape (count, n_L)."""
    rng = _rng(seed)
    phi = net.act.phi
    out = []
    done = 0
    while done < count:
        B = min(batch, count - done)
        x = _uniform(rng, net.input_bounds.lo, net.input_bounds.hi, size=(B, net.dims[0]))
        Ws = [_uniform(rng, W.lo, W.hi, size=(B,) + W.shape) for W in net.weights]
        bs = [_uniform(rng, b.lo, b.hi, size=(B,) + b.shape) for b in net.biases]
        out.append(batch_forward(Ws, bs, x, phi))
        done += B
    return np.concatenate(out) if out else np.empty((0, net.dims[-1]))


def random_network(L: int, dims, bound_range=(-1.0, 1.0), seed=None, activation: str = "relu") -> UncertainNetwork:
    """Random uncertain network; each interval is two ordered uniform draws.

    ``dims`` is either the full width list n_0..n_L or a single int used for
    every layer.
    """
    if isinstance(dims, (int, np.integer)):
        dims = [int(dims)] * (L + 1)
    dims = tuple(int(d) for d in dims)
    if len(dims) != L + 1:
        raise ValueError(f"expected {L + 1} widths for depth {L}, got {len(dims)}")
    c_lo, c_hi = map(float, bound_range)
    if c_lo > c_hi:
        raise ValueError("bound_range must satisfy lo <= hi")
    rng = _rng(seed)

    def draw(shape):
        a = rng.uniform(c_lo, c_hi, size=(2,) + shape)
        return a.min(axis=0), a.max(axis=0)

    x_bounds = IntervalVector(*draw((dims[0],)))
    Ws, bs = [], []
    for l in range(1, L + 1):
        Ws.append(IntervalMatrix(*draw((dims[l], dims[l - 1]))))
        bs.append(IntervalVector(*draw((dims[l],))))
    activations.builtin(activation)
    return UncertainNetwork(dims, Ws, bs, activation, x_bounds)


def to_dict(net: UncertainNetwork) -> dict:
    # arrays are row-major on disk
    return {
        "dims": list(net.dims),
        "activation": net.activation,
        "input": {"lo": net.input_bounds.lo.tolist(), "hi": net.input_bounds.hi.tolist()},
        "layers": [
            {"W_lo": W.lo.tolist(), "W_hi": W.hi.tolist(), "b_lo": b.lo.tolist(), "b_hi": b.hi.tolist()}
            for W, b in zip(net.weights, net.biases)
        ],
    }


def _array(obj, what, ndim):
    try:
        a = np.array(obj, dtype=float)
    except (TypeError, ValueError):
        raise NetworkFormatError(f"malformed network file: {what} is not a numeric array") from None
    if a.ndim != ndim:
        raise NetworkFormatError(f"shape error: {what} must be {ndim}-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NetworkFormatError(f"malformed network file: {what} has non-finite entries")
    return a


def _pair(lo, hi, what, shape):
    if lo.shape != shape or hi.shape != shape:
        raise NetworkFormatError(f"shape error: {what} has shape {lo.shape}/{hi.shape}, dims imply {shape}")
    if np.any(lo > hi):
        raise NetworkFormatError(f"validation error: {what} has inverted bounds (lo > hi)")


def from_dict(d: dict) -> UncertainNetwork:
    try:
        dims = [int(v) for v in d["dims"]]
        act = str(d["activation"])
        inp = d["input"]
        layers = d["layers"]
        x_lo, x_hi = _array(inp["lo"], "input.lo", 1), _array(inp["hi"], "input.hi", 1)
        raw = [(ly["W_lo"], ly["W_hi"], ly["b_lo"], ly["b_hi"]) for ly in layers]
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, NetworkFormatError):
            raise
        raise NetworkFormatError(f"malformed network file: missing or invalid field ({e})") from None
    if len(dims) < 2 or any(v <= 0 for v in dims):
        raise NetworkFormatError(f"shape error: dims must be >= 2 positive integers, got {dims}")
    if len(raw) != len(dims) - 1:
        raise NetworkFormatError(f"shape error: {len(raw)} layers but dims imply {len(dims) - 1}")
    if act not in activations.names():
        raise NetworkFormatError(f"malformed network file: unknown activation {act!r}")
    _pair(x_lo, x_hi, "input", (dims[0],))
    Ws, bs = [], []
    for l, (wl, wh, bl, bh) in enumerate(raw, start=1):
        wl, wh = _array(wl, f"layer {l} W_lo", 2), _array(wh, f"layer {l} W_hi", 2)
        bl, bh = _array(bl, f"layer {l} b_lo", 1), _array(bh, f"layer {l} b_hi", 1)
        _pair(wl, wh, f"layer {l} W", (dims[l], dims[l - 1]))
        _pair(bl, bh, f"layer {l} b", (dims[l],))
        Ws.append(IntervalMatrix(wl, wh))
        bs.append(IntervalVector(bl, bh))
    return UncertainNetwork(tuple(dims), Ws, bs, act, IntervalVector(x_lo, x_hi))


def save(net: UncertainNetwork, path) -> None:
    # json writes floats with repr(), which round-trips float64 exactly
    Path(path).write_text(json.dumps(to_dict(net), indent=1) + "\n")


def load(path) -> UncertainNetwork:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as e:
        raise NetworkFormatError(f"malformed network file: {e}") from None
    if not isinstance(d, dict):
        raise NetworkFormatError("malformed network file: top level must be an object")
    return from_dict(d)


def networks_equal(a: UncertainNetwork, b: UncertainNetwork) -> bool:
    return (
        a.dims == b.dims
        and a.activation == b.activation
        and a.input_bounds == b.input_bounds
        and all(x == y for x, y in zip(a.weights, b.weights))
        and all(x == y for x, y in zip(a.biases, b.biases))
    )


def point_network(weights, biases, x0, activation="relu") -> UncertainNetwork:
    """Zero-width uncertain network wrapping concrete parameters."""
    Ws = [IntervalMatrix(np.atleast_2d(W), np.atleast_2d(W)) for W in weights]
    bs = [IntervalVector(np.atleast_1d(b), np.atleast_1d(b)) for b in biases]
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    dims = (x0.shape[0],) + tuple(W.rows for W in Ws)
    return UncertainNetwork(dims, Ws, bs, activation, IntervalVector(x0, x0))

