"""Multi-agent advantage actor-critic."""

from .agent import (ActionSpec, Agent, AgentConfig, Transition, TrainResult, advantage,
                    complexity_estimate, encode_observation, reward, sample_action, train)
from .nets import (MlpParams, actor_gradient, apply_update, critic_gradient, init_mlp,
                   mlp_forward, policy, softmax)

__all__ = [
    "ActionSpec", "Agent", "AgentConfig", "Transition", "TrainResult", "advantage",
    "complexity_estimate", "encode_observation", "reward", "sample_action", "train",
    "MlpParams", "actor_gradient", "apply_update", "critic_gradient", "init_mlp",
    "mlp_forward", "policy", "softmax",
]
