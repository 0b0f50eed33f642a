"""Dense tanh networks, softmax policy head, and exact policy/value gradients."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import _kernels
from ..errors import ShapeError

HIDDEN = (64, 64)


@dataclass
class MlpParams:
    """Layer weights (out, in) and bias vectors; hidden tanh, linear readout."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeError("need one bias per weight matrix and at least one layer")
        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in self.weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float64) for b in self.biases]
        prev = None
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeError(f"layer {i}: weight {w.shape} / bias {b.shape} mismatch")
            if prev is not None and w.shape[1] != prev:
                raise ShapeError(f"layer {i}: expects {w.shape[1]} inputs, previous layer gives {prev}")
            prev = w.shape[0]

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def arrays(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out += [w, b]
        return out

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def with_flat(self, vec: np.ndarray) -> "MlpParams":
        out = self.copy()
        pos = 0
        for a in out.arrays():
            a.ravel()[:] = vec[pos:pos + a.size]
            pos += a.size
        return out

    def all_finite(self) -> bool:
        return all(np.isfinite(a).all() for a in self.arrays())

    def checksum(self) -> str:
        h = hashlib.sha256()
        for a in self.arrays():
            h.update(a.tobytes())
        return h.hexdigest()


def init_mlp(sizes: Sequence[int], rng: np.random.Generator) -> MlpParams:
    """Uniform(+-1/sqrt(fan_in)) weights, zero biases."""
    ws, bs = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        lim = 1.0 / math.sqrt(fan_in)
        ws.append(rng.uniform(-lim, lim, size=(fan_out, fan_in)))
        bs.append(np.zeros(fan_out))
    return MlpParams(ws, bs)


def actor_sizes(n_paths: int, hidden: Sequence[int] = HIDDEN) -> tuple[int, ...]:
    return (4 * n_paths + 2, *hidden, 9 * n_paths)


def critic_sizes(n_paths: int, hidden: Sequence[int] = HIDDEN) -> tuple[int, ...]:
    return (4 * n_paths + 2, *hidden, 1)


def _forward(params: MlpParams, x, kernels=None) -> list[np.ndarray]:
    k = kernels or _kernels.active
    try:
        return k.forward(params.weights, params.biases, x)
    except ValueError as exc:
        raise ShapeError(str(exc)) from None


def mlp_forward(params: MlpParams, x, kernels=None) -> np.ndarray:
    return _forward(params, x, kernels)[-1]


def softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    e = np.exp(z - z.max())
    return e / e.sum()


def policy(params: MlpParams, obs, kernels=None) -> np.ndarray:
    return softmax(mlp_forward(params, obs, kernels))


def value(params: MlpParams, obs, kernels=None) -> float:
    return float(mlp_forward(params, obs, kernels)[0])


def actor_loss(params: MlpParams, obs, action: int, adv: float) -> float:
    """-log pi(a|s) * A, computed stably via log-sum-exp."""
    z = mlp_forward(params, obs)
    m = z.max()
    logp = z[action] - (m + math.log(np.exp(z - m).sum()))
    return -logp * adv


def critic_loss(params: MlpParams, obs, td_target: float) -> float:
    return (td_target - value(params, obs)) ** 2


def actor_gradient(params: MlpParams, obs, action: int, adv: float, kernels=None) -> MlpParams:
    k = kernels or _kernels.active
    acts = _forward(params, obs, k)
    probs = softmax(acts[-1])
    dlogits = probs * adv
    dlogits[action] -= adv
    gw, gb = k.backward(params.weights, acts, dlogits)
    return MlpParams(gw, gb)


def critic_gradient(params: MlpParams, obs, td_target: float, kernels=None) -> MlpParams:
    k = kernels or _kernels.active
    acts = _forward(params, obs, k)
    dv = np.array([-2.0 * (td_target - acts[-1][0])])
    gw, gb = k.backward(params.weights, acts, dv)
    return MlpParams(gw, gb)


def grad_norm(grad: MlpParams) -> float:
    return math.sqrt(sum(float(np.dot(a.ravel(), a.ravel())) for a in grad.arrays()))


def _step_scale(grad: MlpParams, learning_rate: float, grad_clip_norm: float | None) -> tuple[float, float]:
    norm = grad_norm(grad)
    scale = learning_rate
    if grad_clip_norm is not None and norm > grad_clip_norm:
        scale *= grad_clip_norm / norm
    return scale, norm


def apply_update(params: MlpParams, grad: MlpParams, learning_rate: float,
                 grad_clip_norm: float | None = None) -> MlpParams:
    """Clip ``grad`` to the global norm, then take one descent step (returns new params)."""
    if params.sizes != grad.sizes:
        raise ShapeError(f"gradient shapes {grad.sizes} do not match params {params.sizes}")
    scale, _ = _step_scale(grad, learning_rate, grad_clip_norm)
    return MlpParams([w - scale * g for w, g in zip(params.weights, grad.weights)],
                     [b - scale * g for b, g in zip(params.biases, grad.biases)])


def apply_update_inplace(params: MlpParams, grad: MlpParams, learning_rate: float,
                         grad_clip_norm: float | None = None) -> float:
    """In-place variant of :func:`apply_update`; returns the pre-clip gradient norm."""
    scale, norm = _step_scale(grad, learning_rate, grad_clip_norm)
    if math.isfinite(norm):
        for p, g in zip(params.arrays(), grad.arrays()):
            p -= scale * g
    return norm
