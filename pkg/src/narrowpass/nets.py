"""Dense feedforward nets with hand-derived gradients and an Adam optimizer.

Everything the policy and critics need, float64 throughout, no ML framework.
Weights are stored row-major as numpy arrays: ``weights[i]`` has shape
``(layer_sizes[i+1], layer_sizes[i])``. Hidden activation is tanh, output is
identity. Forward/backward are pure functions; the optimizer mutates the
parameter arrays it is given, in the order they appear in the list.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
_LOG_2PI = math.log(2.0 * math.pi)


class DimensionError(ValueError):
    """Input/parameter shapes violate the declared layer sizes."""


class NonFiniteError(FloatingPointError):
    """A gradient or parameter became NaN/Inf; message names the array."""


@dataclass
class Mlp:
    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "Mlp":
        return Mlp(
            layer_sizes=list(self.layer_sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    @property
    def in_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def out_dim(self) -> int:
        return self.layer_sizes[-1]


def init_mlp(layer_sizes: list[int], rng: np.random.Generator) -> Mlp:
    """Seeded uniform init scaled by 1/sqrt(fan_in)."""
    if len(layer_sizes) < 2:
        raise DimensionError(f"need at least input and output sizes, got {layer_sizes}")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return Mlp(list(layer_sizes), weights, biases)


def _check_input(net: Mlp, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.in_dim:
        raise DimensionError(f"input has width {x.shape[-1]}, net expects {net.in_dim}")
    return x


def mlp_forward(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Forward pass for a single vector ``(d,)`` or a batch ``(B, d)``."""
    x = _check_input(net, x)
    a = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w.T + b
        if i != last:
            a = np.tanh(a)
    return a


def mlp_forward_cached(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Forward pass that also returns the per-layer activations for backprop.

    The cache holds ``[a_0, a_1, ..., a_L]`` with ``a_0`` the (2D) input and
    ``a_i`` the post-activation output of layer ``i``.
    """
    x = _check_input(net, x)
    squeeze = x.ndim == 1
    a = np.atleast_2d(x)
    cache = [a]
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w.T + b
        if i != last:
            a = np.tanh(a)
        cache.append(a)
    out = cache[-1][0] if squeeze else cache[-1]
    return out, cache


@dataclass
class MlpGrads:
    weights: list[np.ndarray]
    biases: list[np.ndarray]


def mlp_backward_from_cache(
    net: Mlp, cache: list[np.ndarray], upstream: np.ndarray
) -> tuple[MlpGrads, np.ndarray]:
    """Backprop through a cached forward pass.

    ``upstream`` is dL/d(output) and may be ``(out,)`` or ``(B, out)``;
    parameter gradients are summed over the batch. Also returns dL/d(input)
    with the same leading shape as the cached input.
    """
    upstream = np.asarray(upstream, dtype=np.float64)
    if upstream.shape[-1] != net.out_dim:
        raise DimensionError(
            f"upstream has width {upstream.shape[-1]}, net outputs {net.out_dim}"
        )
    squeeze = upstream.ndim == 1
    g = np.atleast_2d(upstream)
    if g.shape[0] != cache[0].shape[0]:
        raise DimensionError(
            f"upstream batch {g.shape[0]} does not match cached batch {cache[0].shape[0]}"
        )
    n_layers = len(net.weights)
    d_weights: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    d_biases: list[np.ndarray] = [None] * n_layers  # type: ignore[list-item]
    for i in range(n_layers - 1, -1, -1):
        if i != n_layers - 1:
            g = g * (1.0 - cache[i + 1] ** 2)  # tanh' via stored activation
        a_in = cache[i]
        d_weights[i] = g.T @ a_in
        d_biases[i] = g.sum(axis=0)
        g = g @ net.weights[i]
    input_grad = g[0] if squeeze else g
    return MlpGrads(d_weights, d_biases), input_grad


def mlp_backward(
    net: Mlp, x: np.ndarray, upstream: np.ndarray
) -> tuple[MlpGrads, np.ndarray]:
    """Gradients of ``upstream . mlp_forward(net, x)`` w.r.t. params and input."""
    _, cache = mlp_forward_cached(net, x)
    return mlp_backward_from_cache(net, cache, upstream)


# ---------------------------------------------------------------------------
# Gaussian action head


@dataclass
class GaussianPolicyHead:
    """Diagonal-Gaussian head: a mean net plus a state-independent log-std."""

    mean_net: Mlp
    log_std: np.ndarray

    def copy(self) -> "GaussianPolicyHead":
        return GaussianPolicyHead(self.mean_net.copy(), self.log_std.copy())

    @property
    def action_dim(self) -> int:
        return self.mean_net.out_dim

    def clamp_log_std(self) -> None:
        np.clip(self.log_std, LOG_STD_MIN, LOG_STD_MAX, out=self.log_std)


def init_gaussian_head(
    obs_dim: int,
    action_dim: int,
    hidden: tuple[int, ...],
    rng: np.random.Generator,
    log_std_init: float = -0.5,
) -> GaussianPolicyHead:
    net = init_mlp([obs_dim, *hidden, action_dim], rng)
    return GaussianPolicyHead(net, np.full(action_dim, log_std_init, dtype=np.float64))


def logprob_of(head: GaussianPolicyHead, mean: np.ndarray, action: np.ndarray) -> np.ndarray:
    """Log density of ``action`` given a precomputed mean; batch-aware."""
    std = np.exp(head.log_std)
    z = (np.asarray(action, dtype=np.float64) - mean) / std
    return -0.5 * np.sum(z * z, axis=-1) - np.sum(head.log_std) - 0.5 * head.action_dim * _LOG_2PI


def gaussian_logprob(head: GaussianPolicyHead, obs: np.ndarray, action: np.ndarray) -> np.ndarray:
    """Diagonal-Gaussian log density of the raw (pre-clamp) action."""
    mean = mlp_forward(head.mean_net, obs)
    return logprob_of(head, mean, action)


def sample_action(
    head: GaussianPolicyHead, obs: np.ndarray, rng: np.random.Generator
) -> tuple[np.ndarray, float]:
    """Draw a raw action and its log-prob; the environment clamps on use."""
    mean = mlp_forward(head.mean_net, obs)
    noise = rng.standard_normal(head.action_dim)
    action = mean + np.exp(head.log_std) * noise
    return action, float(logprob_of(head, mean, action))


def gaussian_entropy(head: GaussianPolicyHead) -> float:
    """Entropy of the diagonal Gaussian (independent of the observation)."""
    k = head.action_dim
    return float(np.sum(head.log_std) + 0.5 * k * (1.0 + _LOG_2PI))


# ---------------------------------------------------------------------------
# Adam


@dataclass
class AdamState:
    """Moment buffers mirroring one fixed-order parameter list."""

    lr: float
    beta1: float
    beta2: float
    eps: float
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def adam_init(
    params: list[np.ndarray],
    lr: float = 1e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> AdamState:
    return AdamState(
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        step=0,
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
    )


def adam_step(
    state: AdamState,
    params: list[np.ndarray],
    grads: list[np.ndarray],
    names: list[str] | None = None,
) -> None:
    """One Adam update, applied in the order of ``params``; mutates in place.

    Raises NonFiniteError naming the offending array if any gradient is not
    finite.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise DimensionError(
            f"parameter/gradient/state counts differ: {len(params)}/{len(grads)}/{len(state.m)}"
        )
    for i, (p, g) in enumerate(zip(params, grads)):
        if p.shape != g.shape:
            raise DimensionError(f"grad {i} has shape {g.shape}, param has {p.shape}")
        if not np.all(np.isfinite(g)):
            label = names[i] if names else f"param[{i}]"
            raise NonFiniteError(f"non-finite gradient in {label}")
    state.step += 1
    t = state.step
    bc1 = 1.0 - state.beta1**t
    bc2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / bc1) / (np.sqrt(v / bc2) + state.eps)


# ---------------------------------------------------------------------------
# Serialization helpers (full-precision structured text)


def mlp_to_dict(net: Mlp) -> dict:
    return {
        "layer_sizes": list(net.layer_sizes),
        "weights": [w.ravel().tolist() for w in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def mlp_from_dict(d: dict) -> Mlp:
    sizes = [int(s) for s in d["layer_sizes"]]
    weights, biases = [], []
    for i, (wf, bf) in enumerate(zip(d["weights"], d["biases"])):
        shape = (sizes[i + 1], sizes[i])
        w = np.array(wf, dtype=np.float64).reshape(shape)
        b = np.array(bf, dtype=np.float64)
        if b.shape != (sizes[i + 1],):
            raise DimensionError(f"bias {i} has length {b.shape[0]}, expected {sizes[i + 1]}")
        weights.append(w)
        biases.append(b)
    return Mlp(sizes, weights, biases)


def adam_to_dict(state: AdamState) -> dict:
    return {
        "lr": state.lr,
        "beta1": state.beta1,
        "beta2": state.beta2,
        "eps": state.eps,
        "step": state.step,
        "m": [a.ravel().tolist() for a in state.m],
        "v": [a.ravel().tolist() for a in state.v],
    }


def adam_from_dict(d: dict, params: list[np.ndarray]) -> AdamState:
    state = AdamState(
        lr=float(d["lr"]),
        beta1=float(d["beta1"]),
        beta2=float(d["beta2"]),
        eps=float(d["eps"]),
        step=int(d["step"]),
        m=[np.array(a, dtype=np.float64).reshape(p.shape) for a, p in zip(d["m"], params)],
        v=[np.array(a, dtype=np.float64).reshape(p.shape) for a, p in zip(d["v"], params)],
    )
    if len(state.m) != len(params):
        raise DimensionError("optimizer state does not mirror the parameter list")
    return state
