"""Dense feedforward networks with hand-written backprop and Adam.

Only what the actor and critic need: ReLU hidden layers, a Tanh or linear
output layer, float64 everywhere.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np


_TANH_MAX = np.nextafter(1.0, 0.0)


class ContractError(ValueError):
    """Raised when a caller violates a shape or value precondition."""


class NonFiniteError(FloatingPointError):
    """Raised when a gradient or loss contains NaN or Inf."""


class OutputActivation(str, enum.Enum):
    TANH = "tanh"
    LINEAR = "linear"


@dataclass(frozen=True)
class MlpSpec:
    """Layer shapes of an MLP with ReLU hidden layers."""

    input_dim: int
    hidden_dims: tuple[int, ...]
    output_dim: int
    output_activation: OutputActivation = OutputActivation.LINEAR

    def __post_init__(self):
        object.__setattr__(self, "hidden_dims", tuple(int(h) for h in self.hidden_dims))
        object.__setattr__(self, "output_activation", OutputActivation(self.output_activation))
        if not self.hidden_dims:
            raise ContractError("hidden_dims must be non-empty")
        if min(self.layer_dims) < 1:
            raise ContractError(f"all layer widths must be >= 1, got {self.layer_dims}")

    @property
    def layer_dims(self) -> tuple[int, ...]:
        return (self.input_dim, *self.hidden_dims, self.output_dim)

    @property
    def depth(self) -> int:
        """Number of affine layers."""
        return len(self.hidden_dims) + 1

    @property
    def param_count(self) -> int:
        dims = self.layer_dims
        return sum((a + 1) * b for a, b in zip(dims[:-1], dims[1:]))


@dataclass
class MlpParams:
    """Weights ``W[k]`` of shape (fan_in, fan_out) and biases ``b[k]`` of shape (fan_out,)."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def arrays(self) -> list[np.ndarray]:
        """Views in the fixed order W0, b0, W1, b1, ... (mutating them mutates the params)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def is_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays())

    @classmethod
    def zeros(cls, spec: MlpSpec) -> "MlpParams":
        dims = spec.layer_dims
        return cls(
            [np.zeros((a, b)) for a, b in zip(dims[:-1], dims[1:])],
            [np.zeros(b) for b in dims[1:]],
        )


@dataclass
class ForwardTrace:
    """Cached values of one forward pass.

    ``activations[0]`` is the input batch; ``pre_activations[k]`` and
    ``activations[k + 1]`` belong to affine layer ``k``.
    """

    pre_activations: list[np.ndarray]
    activations: list[np.ndarray]

    @property
    def batch_size(self) -> int:
        return self.activations[0].shape[0]


INIT_SCHEMES = ("he", "fan_in_uniform")


def init_params(spec: MlpSpec, seed: int | np.random.Generator, scheme: str = "he") -> MlpParams:
    """Random parameters for ``spec``, deterministic in ``seed``.

    ``"he"``: normal weights with std sqrt(2/fan_in) on ReLU layers and
    sqrt(1/fan_in) on the output layer, zero biases.

    ``"fan_in_uniform"``: weights and biases uniform on +-1/sqrt(fan_in). Its
    output scale shrinks with depth instead of tracking the input scale, so a
    Tanh head stays unsaturated on inputs of magnitude ~10.
    """
    rng = np.random.default_rng(seed)
    dims = spec.layer_dims
    weights, biases = [], []
    for k, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:])):
        if scheme == "he":
            gain = 1.0 if k == spec.depth - 1 else 2.0
            weights.append(rng.normal(0.0, np.sqrt(gain / fan_in), size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        elif scheme == "fan_in_uniform":
            bound = 1.0 / np.sqrt(fan_in)
            weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            biases.append(rng.uniform(-bound, bound, size=fan_out))
        else:
            raise ContractError(f"unknown init scheme {scheme!r}; expected one of {INIT_SCHEMES}")
    return MlpParams(weights, biases)


def _check_params(spec: MlpSpec, params: MlpParams) -> None:
    dims = spec.layer_dims
    if len(params.weights) != spec.depth or len(params.biases) != spec.depth:
        raise ContractError("parameter depth does not match spec")
    for k, (a, b) in enumerate(zip(dims[:-1], dims[1:])):
        if params.weights[k].shape != (a, b) or params.biases[k].shape != (b,):
            raise ContractError(f"layer {k} parameter shapes do not match spec ({a}->{b})")


def forward(spec: MlpSpec, params: MlpParams, batch_inputs: np.ndarray) -> tuple[np.ndarray, ForwardTrace]:
    x = np.asarray(batch_inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != spec.input_dim:
        raise ContractError(f"expected inputs of shape (batch, {spec.input_dim}), got {x.shape}")
    _check_params(spec, params)
    pre, acts = [], [x]
    h = x
    last = spec.depth - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w + b
        pre.append(z)
        if k < last:
            h = np.maximum(z, 0.0)
        elif spec.output_activation is OutputActivation.TANH:
            # float tanh rounds to +-1 for |z| > ~19; keep outputs strictly inside
            h = np.clip(np.tanh(z), -_TANH_MAX, _TANH_MAX)
        else:
            h = z
        acts.append(h)
    return h, ForwardTrace(pre, acts)


def backward(
    spec: MlpSpec, params: MlpParams, trace: ForwardTrace, output_grads: np.ndarray
) -> tuple[MlpParams, np.ndarray]:
    """Gradients of ``sum(outputs * output_grads)`` w.r.t. parameters and inputs.

    ReLU'(0) is taken as 0.
    """
    g = np.asarray(output_grads, dtype=np.float64)
    out = trace.activations[-1]
    if g.shape != out.shape:
        raise ContractError(f"output_grads shape {g.shape} does not match outputs {out.shape}")
    if len(trace.pre_activations) != spec.depth:
        raise ContractError("trace depth does not match spec")

    if spec.output_activation is OutputActivation.TANH:
        g = g * (1.0 - out * out)
    d_weights = [None] * spec.depth
    d_biases = [None] * spec.depth
    for k in range(spec.depth - 1, -1, -1):
        d_weights[k] = trace.activations[k].T @ g
        d_biases[k] = g.sum(axis=0)
        g = g @ params.weights[k].T
        if k > 0:
            g = g * (trace.pre_activations[k - 1] > 0.0)
    return MlpParams(d_weights, d_biases), g


@dataclass
class AdamState:
    """Moment estimates for a list of parameter arrays."""

    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def for_arrays(cls, arrays: Sequence[np.ndarray], lr: float = 1e-3, **hyper) -> "AdamState":
        return cls(
            m=[np.zeros_like(a, dtype=np.float64) for a in arrays],
            v=[np.zeros_like(a, dtype=np.float64) for a in arrays],
            lr=lr,
            **hyper,
        )


def adam_step(params: Sequence[np.ndarray], grads: Sequence[np.ndarray], state: AdamState) -> None:
    """One in-place Adam update (bias-corrected, epsilon outside the square root).

    Raises ``NonFiniteError`` before touching anything if a gradient is not finite.
    """
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ContractError("params, grads and optimizer state disagree in length")
    for p, g in zip(params, grads):
        if p.shape != np.shape(g):
            raise ContractError(f"gradient shape {np.shape(g)} does not match parameter {p.shape}")
        if not np.isfinite(g).all():
            raise NonFiniteError("non-finite gradient passed to adam_step")

    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
