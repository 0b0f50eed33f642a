"""Stationary two-path environment where one path always pays more."""

from __future__ import annotations

import numpy as np

from .agent import ActionSpec


class DominantPathEnv:
    """Observations are i.i.d. uniform vectors shaped like real observations;
    the reward depends only on the chosen primary path."""

    def __init__(self, n_agents: int = 1, n_paths: int = 2, dominant: int = 1,
                 rewards: tuple[float, float] = (1.0, 0.2), horizon: int = 20, seed: int = 0):
        self.n_agents = n_agents
        self.n_paths = n_paths
        self.dominant = dominant
        self.good, self.bad = rewards
        self.horizon = horizon
        self.seed = seed
        self.obs_dim = 4 * n_paths + 2
        self.t = 0
        self.rng = np.random.default_rng(seed)

    def _obs(self) -> list[np.ndarray]:
        return [self.rng.random(self.obs_dim) for _ in range(self.n_agents)]

    def sample_states(self, k: int, seed: int) -> np.ndarray:
        return np.random.default_rng(seed).random((k, self.obs_dim))

    def reset(self, episode: int) -> list[np.ndarray]:
        self.rng = np.random.default_rng([self.seed, episode])
        self.t = 0
        return self._obs()

    def step(self, actions: list[ActionSpec]):
        self.t += 1
        rewards = [self.good if a.primary_path == self.dominant else self.bad for a in actions]
        # continuing task cut at the horizon: keep bootstrapping past the cut
        return self._obs(), rewards, self.t >= self.horizon, False
