"""Dense float64 arrays, a small MLP family, and its gradients.

Tensors are plain ``numpy.ndarray`` objects with dtype float64. A network is
described by :class:`MlpModel`; its weights live in one flat vector whose
layout is ``W_0, b_0, W_1, b_1, ...`` with each ``W_l`` stored row-major with
shape ``(fan_in, fan_out)``.

Gradients are computed by a hand-written reverse pass. An *objective* is any
callable ``objective(logits) -> (value, dvalue_dlogits)`` on an ``(N, Y)``
logit array; :func:`grad_objective` chains ``dvalue_dlogits`` back through
the network.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ContractError, NumericInputError

__all__ = [
    "MlpModel",
    "logsumexp",
    "log_softmax",
    "log_softmax_rows",
    "softmax_rows",
    "forward_logits",
    "grad_objective",
    "objective_value",
    "finite_difference_gradient",
    "fd_step",
    "max_relative_error",
]

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class MlpModel:
    """Fully connected network ``D -> hidden... -> Y``."""

    layer_widths: tuple
    activation: str = "relu"
    bias: bool = True

    def __post_init__(self):
        widths = tuple(int(v) for v in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2:
            raise ContractError("layer_widths needs at least an input and an output width")
        if any(v < 1 for v in widths):
            raise ContractError(f"layer widths must be positive, got {widths}")
        if widths[-1] < 2:
            raise ContractError("need at least two classes")
        if self.activation not in ACTIVATIONS:
            raise ContractError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")

    @property
    def input_dim(self):
        return self.layer_widths[0]

    @property
    def n_classes(self):
        return self.layer_widths[-1]

    @property
    def n_layers(self):
        return len(self.layer_widths) - 1

    @cached_property
    def segments(self):
        """List of ``(name, start, stop, shape)`` for every parameter block."""
        out = []
        pos = 0
        for l, (fan_in, fan_out) in enumerate(zip(self.layer_widths[:-1], self.layer_widths[1:])):
            out.append((f"W{l}", pos, pos + fan_in * fan_out, (fan_in, fan_out)))
            pos += fan_in * fan_out
            if self.bias:
                out.append((f"b{l}", pos, pos + fan_out, (fan_out,)))
                pos += fan_out
        return tuple(out)

    @property
    def n_params(self):
        return self.segments[-1][2]

    def unpack(self, w):
        """Split a flat vector into per-layer ``(W, b)`` views (``b`` is None without bias)."""
        w = np.asarray(w, dtype=np.float64)
        if w.shape != (self.n_params,):
            raise ContractError(f"parameter vector has shape {w.shape}, model expects ({self.n_params},)")
        blocks = {name: w[a:b].reshape(shape) for name, a, b, shape in self.segments}
        return [(blocks[f"W{l}"], blocks.get(f"b{l}")) for l in range(self.n_layers)]

    def index_of(self, flat_index):
        """Map a flat index to ``(block name, row, col)``; bias entries have row 0."""
        for name, a, b, shape in self.segments:
            if a <= flat_index < b:
                off = flat_index - a
                if len(shape) == 2:
                    return name, off // shape[1], off % shape[1]
                return name, 0, off
        raise IndexError(flat_index)

    def fan_in_per_param(self):
        """Fan-in of the layer each parameter belongs to."""
        out = np.empty(self.n_params)
        for name, a, b, shape in self.segments:
            l = int(name[1:])
            out[a:b] = self.layer_widths[l]
        return out

    def init_params(self, rng):
        """Glorot-uniform weights, zero biases."""
        w = np.zeros(self.n_params)
        for name, a, b, shape in self.segments:
            if name.startswith("W"):
                fan_in, fan_out = shape
                lim = np.sqrt(6.0 / (fan_in + fan_out))
                w[a:b] = rng.uniform(-lim, lim, size=b - a)
        return w

    def to_dict(self):
        return {"layer_widths": list(self.layer_widths), "activation": self.activation, "bias": self.bias}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["layer_widths"]), d.get("activation", "relu"), bool(d.get("bias", True)))


def logsumexp(a, axis=-1, keepdims=False):
    """Max-shifted log-sum-exp along ``axis``."""
    a = np.asarray(a, dtype=np.float64)
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    if not keepdims:
        out = np.squeeze(out, axis=axis)
    return out


def log_softmax_rows(logits):
    """Log-softmax over the last axis."""
    logits = np.asarray(logits, dtype=np.float64)
    return logits - logsumexp(logits, axis=-1, keepdims=True)


def softmax_rows(logits):
    return np.exp(log_softmax_rows(logits))


def log_softmax(logits, label):
    """Log-probability of ``label`` under ``softmax(logits)``.

    >>> round(float(log_softmax([0.0, 0.0], 0)), 6)
    -0.693147
    """
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 1 or logits.size < 2:
        raise ContractError(f"logits must be a vector with at least 2 entries, got shape {logits.shape}")
    if not 0 <= label < logits.size:
        raise ContractError(f"label {label} out of range for {logits.size} classes")
    if not np.all(np.isfinite(logits)):
        raise NumericInputError("logits contain non-finite values")
    return float(log_softmax_rows(logits)[label])


def _check_batch(model, batch):
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != model.input_dim:
        raise ContractError(f"batch must have shape (N, {model.input_dim}), got {batch.shape}")
    return batch


def _activate(model, z):
    if model.activation == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _activate_grad(model, z, a):
    # relu'(0) := 0
    if model.activation == "relu":
        return (z > 0.0).astype(np.float64)
    return 1.0 - a * a


def _forward(model, w, batch):
    layers = model.unpack(w)
    acts = [batch]
    pre = []
    h = batch
    for l, (W, b) in enumerate(layers):
        z = h @ W
        if b is not None:
            z = z + b
        pre.append(z)
        if l < len(layers) - 1:
            h = _activate(model, z)
            acts.append(h)
        else:
            h = z
    return h, acts, pre


def forward_logits(model, w, batch):
    """Logits ``f(x_i; w)`` for every row of ``batch`` (shape ``(N, Y)``)."""
    batch = _check_batch(model, batch)
    return _forward(model, w, batch)[0]


def _backward(model, w, acts, pre, dlogits):
    layers = model.unpack(w)
    grad = np.zeros(model.n_params)
    blocks = {name: grad[a:b].reshape(shape) for name, a, b, shape in model.segments}
    delta = dlogits
    for l in range(len(layers) - 1, -1, -1):
        W, b = layers[l]
        blocks[f"W{l}"][...] = acts[l].T @ delta
        if b is not None:
            blocks[f"b{l}"][...] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ W.T) * _activate_grad(model, pre[l - 1], acts[l])
    return grad


def grad_objective(model, w, batch, objective):
    """Value and parameter-gradient of ``objective(forward_logits(model, w, batch))``.

    Returns ``(value, grad)`` with ``grad`` in the same flat layout as ``w``.
    """
    batch = _check_batch(model, batch)
    logits, acts, pre = _forward(model, w, batch)
    value, dlogits = objective(logits)
    dlogits = np.asarray(dlogits, dtype=np.float64)
    if dlogits.shape != logits.shape:
        raise ContractError(f"objective gradient has shape {dlogits.shape}, expected {logits.shape}")
    return float(value), _backward(model, w, acts, pre, dlogits)


def objective_value(model, w, batch, objective):
    return float(objective(forward_logits(model, w, batch))[0])


def fd_step(w):
    """Per-coordinate central-difference step ``1e-5 * (1 + |w_j|)``."""
    return 1e-5 * (1.0 + np.abs(w))


def finite_difference_gradient(fun, w):
    """Central-difference gradient of the scalar function ``fun`` at ``w``.

    Costs ``2 * len(w)`` evaluations.
    """
    w = np.array(w, dtype=np.float64)
    h = fd_step(w)
    grad = np.empty_like(w)
    for j in range(w.size):
        orig = w[j]
        w[j] = orig + h[j]
        up = fun(w)
        w[j] = orig - h[j]
        down = fun(w)
        w[j] = orig
        grad[j] = (up - down) / (2.0 * h[j])
    return grad


def max_relative_error(g, ref):
    """``max_j |g_j - ref_j|`` scaled by the largest gradient magnitude."""
    g = np.asarray(g)
    ref = np.asarray(ref)
    scale = max(np.max(np.abs(g)), np.max(np.abs(ref)), 1e-300)
    return float(np.max(np.abs(g - ref)) / scale)
