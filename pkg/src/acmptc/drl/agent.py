"""Per-stream actor-critic agents, the composite action space, and training."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Protocol, Sequence

import numpy as np

from ..control import ControlParams, utility
from ..errors import ConfigError, DivergenceError
from ..net_model import NetworkState
from .nets import (HIDDEN, MlpParams, actor_gradient, actor_sizes, apply_update_inplace,
                   critic_gradient, critic_sizes, init_mlp, policy, value)

ADJUST_LEVELS = ("decrease", "keep", "increase")
ADJUST_FACTORS = (0.9, 1.0, 1.1)

# observation scaling: Table I range maxima
BW_SCALE_MBPS = 100.0
LATENCY_SCALE_MS = 100.0
LOSS_SCALE = 0.05


@dataclass(frozen=True)
class AgentConfig:
    discount: float = 0.95
    learning_rate: float = 0.01
    epsilon_start: float = 1.0
    epsilon_end: float = 0.01
    epsilon_decay: float = 0.98
    grad_clip_norm: float = 5.0
    episodes: int = 200
    horizon: int = 1000
    hidden: tuple[int, ...] = HIDDEN

    def validate(self) -> None:
        if not 0.0 < self.discount < 1.0:
            raise ConfigError("agent.discount must lie in (0, 1)")
        if not self.learning_rate > 0:
            raise ConfigError("agent.learning_rate must be > 0")
        if not 0.0 <= self.epsilon_end <= self.epsilon_start <= 1.0:
            raise ConfigError("agent: need 0 <= epsilon_end <= epsilon_start <= 1")
        if not 0.0 < self.epsilon_decay <= 1.0:
            raise ConfigError("agent.epsilon_decay must lie in (0, 1]")
        if not self.grad_clip_norm > 0:
            raise ConfigError("agent.grad_clip_norm must be > 0")
        if self.episodes < 0 or self.horizon < 1:
            raise ConfigError("agent: episodes must be >= 0 and horizon >= 1")
        if not self.hidden or any(h < 1 for h in self.hidden):
            raise ConfigError("agent.hidden must list positive layer widths")

    def epsilon(self, episode: int) -> float:
        return max(self.epsilon_end, self.epsilon_start * self.epsilon_decay ** episode)


class ActionSpec(NamedTuple):
    primary_path: int
    bw_adjust: int
    cwnd_adjust: int
    flat_index: int

    @classmethod
    def from_index(cls, flat_index: int, n_paths: int) -> "ActionSpec":
        if not 0 <= flat_index < 9 * n_paths:
            raise ValueError(f"action index {flat_index} outside [0, {9 * n_paths})")
        path, rest = divmod(flat_index, 9)
        bw, cw = divmod(rest, 3)
        return cls(path, bw, cw, flat_index)

    @classmethod
    def build(cls, primary_path: int, bw_adjust: int, cwnd_adjust: int) -> "ActionSpec":
        return cls(primary_path, bw_adjust, cwnd_adjust, primary_path * 9 + bw_adjust * 3 + cwnd_adjust)

    @property
    def bw_factor(self) -> float:
        return ADJUST_FACTORS[self.bw_adjust]

    @property
    def cwnd_factor(self) -> float:
        return ADJUST_FACTORS[self.cwnd_adjust]


class Transition(NamedTuple):
    obs: np.ndarray
    action: int
    reward: float
    next_obs: np.ndarray
    terminal: bool


def encode_observation(network: NetworkState, feedback: float, experience: float) -> np.ndarray:
    """Per path (bandwidth, latency, loss, congestion) scaled to [0, 1], then feedback and experience."""
    n = network.n_paths
    out = np.empty(4 * n + 2)
    for i, p in enumerate(network.paths):
        out[4 * i] = min(max(p.bandwidth_mbps / BW_SCALE_MBPS, 0.0), 1.0)
        out[4 * i + 1] = min(max(p.latency_ms / LATENCY_SCALE_MS, 0.0), 1.0)
        out[4 * i + 2] = min(max(p.loss_rate / LOSS_SCALE, 0.0), 1.0)
        out[4 * i + 3] = min(max(p.congestion, 0.0), 1.0)
    out[4 * n] = feedback
    out[4 * n + 1] = experience
    return out


def sample_action(probs: np.ndarray, epsilon: float, rng: np.random.Generator) -> ActionSpec:
    """Epsilon-mixture of uniform exploration and the policy distribution.

    Always consumes two uniform draws so the stream of decisions stays aligned
    regardless of which branch is taken.
    """
    k = len(probs)
    u, v = rng.random(2)
    if u < epsilon:
        a = min(int(v * k), k - 1)
    else:
        cdf = np.cumsum(probs)
        a = min(int(np.searchsorted(cdf, v * cdf[-1], side="right")), k - 1)
    return ActionSpec.from_index(a, k // 9)


def reward(bandwidth_norm: float, latency_norm: float, loss_norm: float, qos: float,
           p: ControlParams) -> float:
    return utility(bandwidth_norm, latency_norm, loss_norm, qos, p)


def advantage(r: float, v_next: float, v: float, discount: float, terminal: bool) -> float:
    return r + discount * v_next * (0.0 if terminal else 1.0) - v


def complexity_estimate(n_agents: int, state_dim: int, action_dim: int, param_count: int,
                        iterations: int, c1: float = 1.0, c2: float = 1.0) -> float:
    """Operation count n * I * (c1 |S| N + c2 |A| N)."""
    return n_agents * iterations * (c1 * state_dim * param_count + c2 * action_dim * param_count)


@dataclass
class Agent:
    agent_id: int
    actor: MlpParams
    critic: MlpParams

    @classmethod
    def create(cls, agent_id: int, n_paths: int, rng: np.random.Generator,
               hidden: Sequence[int] = HIDDEN) -> "Agent":
        return cls(agent_id, init_mlp(actor_sizes(n_paths, hidden), rng),
                   init_mlp(critic_sizes(n_paths, hidden), rng))

    @property
    def n_actions(self) -> int:
        return self.actor.sizes[-1]

    def act(self, obs: np.ndarray, epsilon: float, rng: np.random.Generator) -> ActionSpec:
        return sample_action(policy(self.actor, obs), epsilon, rng)

    def greedy(self, obs: np.ndarray) -> ActionSpec:
        probs = policy(self.actor, obs)
        return ActionSpec.from_index(int(np.argmax(probs)), self.n_actions // 9)

    def learn(self, tr: Transition, cfg: AgentConfig) -> tuple[float, float]:
        """One online actor-critic update; returns (advantage, largest gradient norm)."""
        v = value(self.critic, tr.obs)
        v_next = 0.0 if tr.terminal else value(self.critic, tr.next_obs)
        adv = advantage(tr.reward, v_next, v, cfg.discount, tr.terminal)
        target = tr.reward + (0.0 if tr.terminal else cfg.discount * v_next)
        gc = critic_gradient(self.critic, tr.obs, target)
        ga = actor_gradient(self.actor, tr.obs, tr.action, adv)
        nc = apply_update_inplace(self.critic, gc, cfg.learning_rate, cfg.grad_clip_norm)
        na = apply_update_inplace(self.actor, ga, cfg.learning_rate, cfg.grad_clip_norm)
        return adv, max(nc, na) if math.isfinite(nc) and math.isfinite(na) else math.nan

    def checksum(self) -> str:
        return self.actor.checksum() + self.critic.checksum()


class Environment(Protocol):
    n_agents: int

    def reset(self, episode: int) -> list[np.ndarray]: ...

    def step(self, actions: list[ActionSpec]) -> tuple: ...


@dataclass
class TrainResult:
    agents: list[Agent]
    episode_rewards: list[float] = field(default_factory=list)
    agent_rewards: list[list[float]] = field(default_factory=list)
    td_errors: list[float] = field(default_factory=list)


def train(env: Environment, agents: list[Agent], cfg: AgentConfig,
          rng: np.random.Generator, horizon: int | None = None, progress=None) -> TrainResult:
    """Online multi-agent advantage actor-critic.

    Agents share one environment timeline: at each step every agent observes
    and acts (in agent-id order), the environment advances once, then each
    agent updates its own critic on the squared advantage and its actor on
    log-probability times advantage. Epsilon decays once per episode.

    ``env.step`` returns ``(obs, rewards, done)`` or ``(obs, rewards, done,
    terminal)``; without the fourth element ``done`` is treated as terminal,
    with it an episode can be truncated while still bootstrapping.

    ``episode_rewards`` holds the mean per-step reward over agents; ``td_errors``
    the mean squared advantage of each episode.
    """
    cfg.validate()
    if not agents:
        raise ConfigError("need at least one agent")
    if len(agents) != env.n_agents:
        raise ConfigError(f"{len(agents)} agents for an environment with {env.n_agents}")
    T = cfg.horizon if horizon is None else horizon
    result = TrainResult(agents)
    for ep in range(cfg.episodes):
        eps = cfg.epsilon(ep)
        obs = env.reset(ep)
        totals = [0.0] * len(agents)
        sq, count = 0.0, 0
        for t in range(T):
            actions = [ag.act(o, eps, rng) for ag, o in zip(agents, obs)]
            out = env.step(actions)
            nxt, rewards, done = out[:3]
            terminal = out[3] if len(out) > 3 else done
            for j, ag in enumerate(agents):
                tr = Transition(obs[j], actions[j].flat_index, rewards[j], nxt[j], terminal)
                adv, norm = ag.learn(tr, cfg)
                if not (math.isfinite(norm) and math.isfinite(adv)):
                    raise DivergenceError(
                        f"non-finite update at episode {ep}, step {t}, agent {ag.agent_id}")
                totals[j] += rewards[j]
                sq += adv * adv
                count += 1
            obs = nxt
            if done:
                break
        steps = max(t + 1, 1) if T > 0 else 1
        result.agent_rewards.append([x / steps for x in totals])
        result.episode_rewards.append(sum(totals) / (steps * len(agents)))
        result.td_errors.append(sq / max(count, 1))
        for ag in agents:
            if not (ag.actor.all_finite() and ag.critic.all_finite()):
                raise DivergenceError(f"non-finite parameters after episode {ep}, agent {ag.agent_id}")
        if progress is not None:
            progress(ep, result)
    return result
