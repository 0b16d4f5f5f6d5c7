"""
Function Approximator Module

Fully connected networks on numpy with hand-written reverse-mode
differentiation and an Adam optimizer. Hidden layers use ReLU, the output
layer is affine. Weights are stored (fan_in, fan_out) so a batch is x @ W + b.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Sequence, Tuple, TypeVar, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from susp.errors import DimensionMismatch, NonFiniteGradient

logger = logging.getLogger(__name__)


class NetworkConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    hidden_sizes: Tuple[int, ...] = (64, 64)
    # final policy layer starts small so initial actions sit near zero
    policy_output_scale: float = Field(1e-2, gt=0)


@dataclass(frozen=True)
class MlpParams:
    weights: Tuple[np.ndarray, ...]
    biases: Tuple[np.ndarray, ...]

    @property
    def sizes(self) -> List[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def arrays(self) -> List[np.ndarray]:
        """Flat [W0, b0, W1, b1, ...] view"""
        out: List[np.ndarray] = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray]) -> "MlpParams":
        return cls(tuple(arrays[0::2]), tuple(arrays[1::2]))

    def copy(self) -> "MlpParams":
        return MlpParams.from_arrays([a.copy() for a in self.arrays()])


@dataclass(frozen=True)
class ForwardCache:
    inputs: np.ndarray
    pre_activations: Tuple[np.ndarray, ...]
    activations: Tuple[np.ndarray, ...]


def init_mlp(
    sizes: Sequence[int], rng: np.random.Generator, output_scale: float = 1.0
) -> MlpParams:
    """Uniform fan-in initialisation, U(-1/sqrt(fan_in), 1/sqrt(fan_in))"""
    if len(sizes) < 2 or any(int(s) < 1 for s in sizes):
        raise ValueError(f"need at least two positive layer sizes, got {list(sizes)}")
    weights = []
    biases = []
    for i, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        bound = 1.0 / np.sqrt(fan_in)
        scale = output_scale if i == len(sizes) - 2 else 1.0
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)) * scale)
        biases.append(rng.uniform(-bound, bound, size=fan_out) * scale)
    return MlpParams(tuple(weights), tuple(biases))


def _as_batch(params: MlpParams, inputs: np.ndarray) -> Tuple[np.ndarray, bool]:
    x = np.asarray(inputs, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.weights[0].shape[0]:
        raise DimensionMismatch(
            f"input of shape {np.shape(inputs)} does not fit input layer of size "
            f"{params.weights[0].shape[0]}"
        )
    return x, single


def forward_with_cache(params: MlpParams, inputs: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    x, single = _as_batch(params, inputs)
    pre = []
    post = [x]
    h = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w + b
        pre.append(z)
        h = z if i == last else np.maximum(z, 0.0)
        post.append(h)
    out = h[0] if single else h
    return out, ForwardCache(x, tuple(pre), tuple(post))


def forward(params: MlpParams, inputs: np.ndarray) -> np.ndarray:
    """Network output for one input vector or a (batch, n_in) array"""
    return forward_with_cache(params, inputs)[0]


def backward(
    params: MlpParams, cache: ForwardCache, grad_output: np.ndarray
) -> Tuple[MlpParams, np.ndarray]:
    """
    Reverse-mode pass.

    Args:
        params: Network the cache was produced with
        cache: Result of forward_with_cache
        grad_output: dLoss/dOutput, same shape as the forward output

    Returns:
        (gradients shaped like params, dLoss/dInput)
    """
    g = np.asarray(grad_output, dtype=float).reshape(cache.activations[-1].shape)
    grad_w: List[np.ndarray] = [np.empty(0)] * len(params.weights)
    grad_b: List[np.ndarray] = [np.empty(0)] * len(params.weights)
    for i in range(len(params.weights) - 1, -1, -1):
        if i < len(params.weights) - 1:
            g = g * (cache.pre_activations[i] > 0.0)
        grad_w[i] = cache.activations[i].T @ g
        grad_b[i] = g.sum(axis=0)
        g = g @ params.weights[i].T
    if np.ndim(grad_output) == 1:
        g = g[0]
    return MlpParams(tuple(grad_w), tuple(grad_b)), g


def gradient(
    params: MlpParams,
    inputs: np.ndarray,
    loss: Callable[[np.ndarray], Tuple[float, np.ndarray]],
) -> Tuple[float, MlpParams]:
    """
    Value and parameter gradient of loss(forward(params, inputs)).

    loss receives the network output and returns (value, dValue/dOutput).
    """
    out, cache = forward_with_cache(params, inputs)
    value, grad_out = loss(out)
    grads, _ = backward(params, cache, grad_out)
    return float(value), grads


ParamSet = Union[MlpParams, List[np.ndarray]]
P = TypeVar("P", MlpParams, List[np.ndarray])


def _arrays(params: ParamSet) -> List[np.ndarray]:
    return params.arrays() if isinstance(params, MlpParams) else list(params)


@dataclass(frozen=True)
class OptimizerState:
    """Adam moments for one parameter set"""

    m: Tuple[np.ndarray, ...]
    v: Tuple[np.ndarray, ...]
    step: int
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


def init_optimizer(
    params: ParamSet, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8
) -> OptimizerState:
    if lr < 0.0:
        raise ValueError(f"learning rate must be non-negative, got {lr}")
    zeros = tuple(np.zeros_like(a) for a in _arrays(params))
    return OptimizerState(zeros, tuple(np.zeros_like(z) for z in zeros), 0, lr, beta1, beta2, eps)


def optimizer_step(params: P, grads: ParamSet, state: OptimizerState) -> Tuple[P, OptimizerState]:
    """
    One Adam update with bias correction.

    Raises:
        NonFiniteGradient: if any gradient entry is NaN or infinite
        DimensionMismatch: if grads do not match params
    """
    p_arrays = _arrays(params)
    g_arrays = _arrays(grads)
    if len(p_arrays) != len(g_arrays) or any(
        p.shape != g.shape for p, g in zip(p_arrays, g_arrays)
    ):
        raise DimensionMismatch("gradient shapes do not match parameter shapes")
    if not all(np.all(np.isfinite(g)) for g in g_arrays):
        raise NonFiniteGradient("gradient contains NaN or infinite entries")

    step = state.step + 1
    b1, b2 = state.beta1, state.beta2
    m_corr = 1.0 - b1**step
    v_corr = 1.0 - b2**step
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(p_arrays, g_arrays, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * g * g
        new_params.append(p - state.lr * (m / m_corr) / (np.sqrt(v / v_corr) + state.eps))
        new_m.append(m)
        new_v.append(v)
    new_state = OptimizerState(
        tuple(new_m), tuple(new_v), step, state.lr, state.beta1, state.beta2, state.eps
    )
    if isinstance(params, MlpParams):
        return MlpParams.from_arrays(new_params), new_state  # type: ignore[return-value]
    return new_params, new_state  # type: ignore[return-value]


def polyak_update(target: MlpParams, online: MlpParams, tau: float) -> MlpParams:
    """Soft target update: tau * online + (1 - tau) * target"""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must lie in [0, 1], got {tau}")
    return MlpParams.from_arrays(
        [tau * o + (1.0 - tau) * t for t, o in zip(target.arrays(), online.arrays())]
    )
