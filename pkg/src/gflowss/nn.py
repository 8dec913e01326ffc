"""Self-contained dense network with a learnable Fourier-feature first layer.

Layer 1 applies an affine map followed by sin(.); remaining hidden layers
use ReLU; the output layer is affine. Reverse-mode gradients and the Adam
update are implemented here directly, in float64, so the package has no
autodiff dependency. Callers that use the outputs as flows or partition
functions read them in the log domain and exponentiate themselves.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, NonFiniteGradient


@dataclass(frozen=True)
class NetworkConfig:
    input_dim: int
    hidden_widths: tuple[int, ...]
    output_dim: int
    fourier_std: float = 0.1
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.hidden_widths:
            raise ValueError("need at least one hidden layer")
        if self.input_dim < 1 or self.output_dim < 1 or min(self.hidden_widths) < 1:
            raise ValueError("all layer dims must be >= 1")
        if self.fourier_std <= 0:
            raise ValueError("fourier_std must be positive")


@dataclass
class NetworkParams:
    """Per-layer weight matrices (out, in) and bias vectors (out,)."""

    config: NetworkConfig
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def copy(self) -> "NetworkParams":
        return NetworkParams(
            config=self.config,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )

    def layer_dims(self) -> list[tuple[int, int]]:
        return [w.shape for w in self.weights]


@dataclass
class Gradients:
    """Same shapes as NetworkParams.weights / .biases."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]


def init_network(cfg: NetworkConfig) -> NetworkParams:
    """Fresh parameters: Fourier layer ~ Normal(0, fourier_std^2), later
    layers uniform in +-1/sqrt(fan_in), biases zero. Deterministic per seed."""
    rng = np.random.default_rng(cfg.seed)
    dims = [cfg.input_dim, *cfg.hidden_widths, cfg.output_dim]
    weights, biases = [], []
    for layer, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        if layer == 0:
            w = rng.normal(0.0, cfg.fourier_std, size=(fan_out, fan_in))
        else:
            bound = 1.0 / np.sqrt(fan_in)
            w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return NetworkParams(config=cfg, weights=weights, biases=biases)


def _check_input(params: NetworkParams, x: np.ndarray) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    if squeeze:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.config.input_dim:
        raise DimensionMismatch(
            f"expected input dim {params.config.input_dim}, got shape {x.shape}"
        )
    return x, squeeze


def forward_with_cache(params: NetworkParams, x: np.ndarray):
    """Forward pass keeping pre-activations and activations for backward."""
    x, squeeze = _check_input(params, x)
    last = len(params.weights) - 1
    acts = [x]
    pre = []
    h = x
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w.T + b
        pre.append(z)
        if i == 0:
            h = np.sin(z)
        elif i < last:
            h = np.maximum(z, 0.0)
        else:
            h = z
        acts.append(h)
    return (h[0] if squeeze else h), (acts, pre, squeeze)


def forward(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Evaluate the network on a vector (or a batch of row vectors)."""
    y, _ = forward_with_cache(params, x)
    return y


def backward_from_cache(params: NetworkParams, cache, out_grad: np.ndarray):
    """Reverse-mode gradients of out_grad . forward(params, x).

    Returns (Gradients, input_grad). Batched rows accumulate into the
    parameter gradients; the ReLU subgradient at 0 is taken as 0.
    """
    acts, pre, squeeze = cache
    g = np.asarray(out_grad, dtype=np.float64)
    if squeeze:
        g = g[None, :]
    if g.ndim != 2 or g.shape != (acts[0].shape[0], params.config.output_dim):
        raise DimensionMismatch(
            f"out_grad shape {g.shape} incompatible with batch "
            f"({acts[0].shape[0]}, {params.config.output_dim})"
        )
    last = len(params.weights) - 1
    w_grads: list[np.ndarray | None] = [None] * (last + 1)
    b_grads: list[np.ndarray | None] = [None] * (last + 1)
    for i in range(last, -1, -1):
        if i == last:
            gz = g
        elif i == 0:
            gz = g * np.cos(pre[i])
        else:
            gz = g * (pre[i] > 0.0)
        w_grads[i] = gz.T @ acts[i]
        b_grads[i] = gz.sum(axis=0)
        g = gz @ params.weights[i]
    x_grad = g[0] if squeeze else g
    return Gradients(weights=w_grads, biases=b_grads), x_grad


def backward(params: NetworkParams, x: np.ndarray, out_grad: np.ndarray):
    """Convenience wrapper recomputing the forward intermediates."""
    _, cache = forward_with_cache(params, x)
    return backward_from_cache(params, cache, out_grad)


def zero_gradients(params: NetworkParams) -> Gradients:
    return Gradients(
        weights=[np.zeros_like(w) for w in params.weights],
        biases=[np.zeros_like(b) for b in params.biases],
    )


def accumulate(into: Gradients, grads: Gradients, scale: float = 1.0) -> Gradients:
    for dst, src in zip(into.weights, grads.weights):
        dst += scale * src
    for dst, src in zip(into.biases, grads.biases):
        dst += scale * src
    return into


@dataclass
class AdamState:
    """Adam moment accumulators; shapes mirror the parameter lists."""

    learning_rate: float
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m_w: list[np.ndarray] = field(default_factory=list)
    v_w: list[np.ndarray] = field(default_factory=list)
    m_b: list[np.ndarray] = field(default_factory=list)
    v_b: list[np.ndarray] = field(default_factory=list)


def init_adam(params: NetworkParams, learning_rate: float) -> AdamState:
    return AdamState(
        learning_rate=learning_rate,
        m_w=[np.zeros_like(w) for w in params.weights],
        v_w=[np.zeros_like(w) for w in params.weights],
        m_b=[np.zeros_like(b) for b in params.biases],
        v_b=[np.zeros_like(b) for b in params.biases],
    )


def adam_step(params: NetworkParams, grads: Gradients, state: AdamState):
    """One bias-corrected Adam update, in place; returns (params, state)."""
    for g in grads.weights:
        if not np.isfinite(g).all():
            raise NonFiniteGradient("non-finite weight gradient")
    for g in grads.biases:
        if not np.isfinite(g).all():
            raise NonFiniteGradient("non-finite bias gradient")
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params.weights, grads.weights, state.m_w, state.v_w):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
    for p, g, m, v in zip(params.biases, grads.biases, state.m_b, state.v_b):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * g * g
        p -= state.learning_rate * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


def params_to_dict(params: NetworkParams) -> dict:
    """Checkpoint layout: config plus per-layer shape, row-major flat
    weight data, and bias."""
    cfg = params.config
    return {
        "config": {
            "input_dim": cfg.input_dim,
            "hidden_widths": list(cfg.hidden_widths),
            "output_dim": cfg.output_dim,
            "fourier_std": cfg.fourier_std,
            "seed": cfg.seed,
        },
        "layers": [
            {
                "shape": list(w.shape),
                "weight_flat": w.ravel().tolist(),
                "bias": b.tolist(),
            }
            for w, b in zip(params.weights, params.biases)
        ],
    }


def params_from_dict(d: dict) -> NetworkParams:
    c = d["config"]
    cfg = NetworkConfig(
        input_dim=int(c["input_dim"]),
        hidden_widths=tuple(int(h) for h in c["hidden_widths"]),
        output_dim=int(c["output_dim"]),
        fourier_std=float(c["fourier_std"]),
        seed=int(c["seed"]),
    )
    weights, biases = [], []
    for layer in d["layers"]:
        shape = tuple(layer["shape"])
        weights.append(np.array(layer["weight_flat"], dtype=np.float64).reshape(shape))
        biases.append(np.array(layer["bias"], dtype=np.float64))
    return NetworkParams(config=cfg, weights=weights, biases=biases)


def save_params(params: NetworkParams, path: str | Path) -> None:
    Path(path).write_text(json.dumps(params_to_dict(params)))


def load_params(path: str | Path) -> NetworkParams:
    return params_from_dict(json.loads(Path(path).read_text()))
