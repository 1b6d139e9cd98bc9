"""Dense MLP kernel with manual backpropagation and an Adam optimizer.

Everything here treats parameters as flat lists of float64 arrays so that
optimizer state, checkpoints, and finite-difference checks can walk them
uniformly. Forward passes return a tape that the matching backward pass
consumes; forward/backward are pure given the parameters.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch

_ACTIVATIONS = ("relu", "tanh", "identity")


def _act(name, z):
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "identity":
        return z
    raise ValueError(f"unknown activation {name!r}")


def _act_grad(name, z, a):
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "tanh":
        return 1.0 - a * a
    if name == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


def init_mlp(sizes, activation="relu", seed=0, zero_bias=True, hidden_bias=0.0):
    """Uniform(-s, s) weights with s = sqrt(6 / (fan_in + fan_out)), seeded.

    ``hidden_bias`` sets the hidden-layer biases to a constant; a small
    positive value keeps ReLU units alive when the inputs are nonnegative
    (norm vectors), where zero-initialized biases can leave every hidden
    unit dead.
    """
    sizes = tuple(int(s) for s in sizes)
    if len(sizes) < 2:
        raise ValueError("an MLP needs at least an input and an output size")
    if isinstance(activation, str):
        activation = (activation,) * (len(sizes) - 2)
    activation = tuple(activation)
    if len(activation) != len(sizes) - 2:
        raise DimensionMismatch(
            f"{len(sizes) - 2} hidden layers but {len(activation)} activations"
        )
    for name in activation:
        if name not in _ACTIVATIONS:
            raise ValueError(f"unknown activation {name!r}")
    rng = np.random.default_rng(seed)
    params = []
    num_layers = len(sizes) - 1
    for layer, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        s = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-s, s, size=(fan_in, fan_out))
        if not zero_bias:
            b = rng.uniform(-s, s, size=fan_out)
        elif layer < num_layers - 1:
            b = np.full(fan_out, float(hidden_bias))
        else:
            b = np.zeros(fan_out)
        params.append(w)
        params.append(b)
    return MlpParams(sizes, activation, params)


@dataclass
class MlpParams:
    """Layer sizes, per-hidden-layer activations, and [W1, b1, W2, b2, ...]."""

    sizes: tuple
    activations: tuple
    params: list

    @property
    def num_layers(self) -> int:
        return len(self.sizes) - 1

    def copy(self) -> "MlpParams":
        return MlpParams(self.sizes, self.activations, [p.copy() for p in self.params])


def mlp_forward(p: MlpParams, x: np.ndarray):
    """Affine + activation composition; returns (output, tape)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[1] != p.sizes[0]:
        raise DimensionMismatch(f"input width {x.shape[1]} != first layer size {p.sizes[0]}")
    tape = []
    h = x
    for layer in range(p.num_layers):
        w, b = p.params[2 * layer], p.params[2 * layer + 1]
        z = h @ w + b
        if layer < p.num_layers - 1:
            a = _act(p.activations[layer], z)
        else:
            a = z
        tape.append((h, z, a))
        h = a
    return h, tape


def mlp_backward(p: MlpParams, tape, grad_out: np.ndarray):
    """Exact reverse-mode gradients; returns (param_grads, grad_in)."""
    if len(tape) != p.num_layers:
        raise DimensionMismatch("tape does not match the parameter stack")
    grads = [None] * len(p.params)
    g = np.asarray(grad_out, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    for layer in range(p.num_layers - 1, -1, -1):
        h, z, a = tape[layer]
        if layer < p.num_layers - 1:
            g = g * _act_grad(p.activations[layer], z, a)
        w = p.params[2 * layer]
        grads[2 * layer] = h.T @ g
        grads[2 * layer + 1] = g.sum(axis=0)
        g = g @ w.T
    return grads, g


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def cross_entropy(logits: np.ndarray, targets: np.ndarray):
    """Mean cross-entropy over rows; returns (loss, grad wrt logits)."""
    logits = np.atleast_2d(np.asarray(logits, dtype=np.float64))
    targets = np.atleast_1d(np.asarray(targets, dtype=np.int64))
    if targets.shape[0] != logits.shape[0]:
        raise DimensionMismatch("one target per logit row required")
    logp = log_softmax(logits)
    m = logits.shape[0]
    loss = float(-logp[np.arange(m), targets].mean())
    grad = softmax(logits)
    grad[np.arange(m), targets] -= 1.0
    return loss, grad / m


@dataclass
class AdamState:
    """First/second moment buffers mirroring a flat parameter list."""

    lr: float = 1e-2
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = None
    v: list = None

    @staticmethod
    def for_params(params, lr=1e-2, beta1=0.9, beta2=0.999, eps=1e-8) -> "AdamState":
        return AdamState(lr, beta1, beta2, eps, 0,
                         [np.zeros_like(p) for p in params],
                         [np.zeros_like(p) for p in params])


def adam_step(state: AdamState, params: list, grads: list, weight_decay: float = 0.0):
    """In-place Adam update with bias correction.

    Weight decay is decoupled and applied only to arrays with ndim >= 2
    (weight matrices, not biases or scalar logit vectors).
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DimensionMismatch("parameter, gradient, and state lengths differ")
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise DimensionMismatch(f"param {i}: shape {p.shape} vs grad {g.shape}")
        state.m[i] = b1 * state.m[i] + (1 - b1) * g
        state.v[i] = b2 * state.v[i] + (1 - b2) * (g * g)
        mhat = state.m[i] / (1 - b1 ** t)
        vhat = state.v[i] / (1 - b2 ** t)
        p -= state.lr * mhat / (np.sqrt(vhat) + state.eps)
        if weight_decay > 0.0 and p.ndim >= 2:
            p -= state.lr * weight_decay * p


def finite_diff_grads(loss_fn, arrays: list, h: float = 1e-5) -> list:
    """Central finite differences of loss_fn() wrt each entry of each array.

    loss_fn takes no arguments and must read the (mutated in place) arrays.
    """
    grads = []
    for a in arrays:
        g = np.zeros_like(a)
        flat = a.ravel()
        gflat = g.ravel()
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + h
            up = loss_fn()
            flat[idx] = orig - h
            down = loss_fn()
            flat[idx] = orig
            gflat[idx] = (up - down) / (2 * h)
        grads.append(g)
    return grads


def max_relative_error(analytic: list, numeric: list) -> float:
    """max_i |a_i - n_i| / max(1e-8, |a_i|, |n_i|), over all entries."""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(1e-8, np.maximum(np.abs(a), np.abs(n)))
        worst = max(worst, float((np.abs(a - n) / denom).max()) if a.size else 0.0)
    return worst
