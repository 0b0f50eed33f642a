"""Central-difference verification of the actor and critic gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .nets import MlpParams, actor_gradient, actor_loss, critic_gradient, critic_loss, init_mlp

FD_STEP = 1e-5
# gradient entries smaller than this are compared on an absolute scale
ABS_FLOOR = 1e-6


@dataclass
class GradcheckReport:
    n_nets: int
    max_rel_error: float
    max_params: int
    worst: str

    @property
    def passed(self) -> bool:
        return self.max_rel_error < 1e-4


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    return np.abs(analytic - numeric) / np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), ABS_FLOOR)


def numeric_gradient(loss, params: MlpParams, h: float = FD_STEP) -> np.ndarray:
    base = params.flat()
    g = np.empty_like(base)
    for i in range(base.size):
        old = base[i]
        base[i] = old + h
        up = loss(params.with_flat(base))
        base[i] = old - h
        down = loss(params.with_flat(base))
        base[i] = old
        g[i] = (up - down) / (2 * h)
    return g


def random_net(rng: np.random.Generator, max_params: int, scale: float = 1.0) -> MlpParams:
    while True:
        n_in = int(rng.integers(2, 11))
        hidden = [int(rng.integers(2, 17)) for _ in range(int(rng.integers(1, 3)))]
        n_out = int(rng.integers(2, 10))
        sizes = [n_in, *hidden, n_out]
        count = sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))
        if count <= max_params:
            break
    net = init_mlp(sizes, rng)
    # non-zero biases so every parameter is exercised
    for b in net.biases:
        b[:] = rng.normal(0.0, 0.3, size=b.shape)
    for w in net.weights:
        w *= scale
    return net


def run_gradcheck(n_nets: int = 50, max_params: int = 1000, seed: int = 0) -> GradcheckReport:
    rng = np.random.default_rng(seed)
    worst, worst_err, biggest = "", 0.0, 0
    for k in range(n_nets):
        actor = random_net(rng, max_params)
        obs = rng.normal(size=actor.sizes[0])
        action = int(rng.integers(actor.sizes[-1]))
        adv = float(rng.normal())
        an = actor_gradient(actor, obs, action, adv).flat()
        nu = numeric_gradient(lambda p: actor_loss(p, obs, action, adv), actor)
        err = float(relative_error(an, nu).max())
        if err > worst_err:
            worst, worst_err = f"actor net {k} sizes {actor.sizes}", err

        critic = random_net(rng, max_params)
        critic = MlpParams(critic.weights[:-1] + [critic.weights[-1][:1]],
                           critic.biases[:-1] + [critic.biases[-1][:1]])
        obs = rng.normal(size=critic.sizes[0])
        target = float(rng.normal(0.0, 2.0))
        an = critic_gradient(critic, obs, target).flat()
        nu = numeric_gradient(lambda p: critic_loss(p, obs, target), critic)
        err = float(relative_error(an, nu).max())
        if err > worst_err:
            worst, worst_err = f"critic net {k} sizes {critic.sizes}", err
        biggest = max(biggest, actor.n_params, critic.n_params)
    return GradcheckReport(n_nets, worst_err, biggest, worst)
