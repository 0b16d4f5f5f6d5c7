"""
Deterministic Policy-Gradient Baselines

DDPG (one critic, Gaussian exploration) and TD3 (twin critics with a min
bootstrap, clipped target-policy smoothing and delayed actor updates) built
on the same approximators and critic fitting as the SAC agent.
"""

import math
import logging
from dataclasses import dataclass, replace
from typing import Tuple

import numpy as np

from susp.errors import NonFiniteLoss
from susp.learning.approx import (
    MlpParams,
    OptimizerState,
    backward,
    forward,
    forward_with_cache,
    init_mlp,
    init_optimizer,
    optimizer_step,
    polyak_update,
)
from susp.learning.config import RlConfig
from susp.learning.replay import Batch
from susp.learning.sac import UpdateStats, bellman_targets, fit_critic, q_values

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DeterministicAgent:
    kind: str
    actor: MlpParams
    actor_target: MlpParams
    critics: Tuple[MlpParams, ...]
    critic_targets: Tuple[MlpParams, ...]
    actor_opt: OptimizerState
    critic_opts: Tuple[OptimizerState, ...]
    gamma: float
    tau: float
    batch_size: int
    exploration_noise: float
    target_noise: float
    target_noise_clip: float
    policy_delay: int
    update_count: int = 0

    @property
    def obs_dim(self) -> int:
        return self.actor.sizes[0]

    @property
    def act_dim(self) -> int:
        return self.actor.sizes[-1]


def _make_agent(
    kind: str, n_critics: int, obs_dim: int, act_dim: int, config: RlConfig, rng: np.random.Generator
) -> DeterministicAgent:
    hidden = list(config.network.hidden_sizes)
    actor = init_mlp([obs_dim, *hidden, act_dim], rng, config.network.policy_output_scale)
    critics = tuple(init_mlp([obs_dim + act_dim, *hidden, 1], rng) for _ in range(n_critics))

    def adam(params, lr):
        return init_optimizer(params, lr, config.beta1, config.beta2, config.adam_eps)

    return DeterministicAgent(
        kind=kind,
        actor=actor,
        actor_target=actor.copy(),
        critics=critics,
        critic_targets=tuple(c.copy() for c in critics),
        actor_opt=adam(actor, config.lr_actor),
        critic_opts=tuple(adam(c, config.lr_critic) for c in critics),
        gamma=config.gamma,
        tau=config.tau,
        batch_size=config.batch_size,
        exploration_noise=config.exploration_noise,
        target_noise=config.target_noise,
        target_noise_clip=config.target_noise_clip,
        policy_delay=config.policy_delay if kind == "td3" else 1,
    )


def make_ddpg_agent(
    obs_dim: int, act_dim: int, config: RlConfig, rng: np.random.Generator
) -> DeterministicAgent:
    return _make_agent("ddpg", 1, obs_dim, act_dim, config, rng)


def make_td3_agent(
    obs_dim: int, act_dim: int, config: RlConfig, rng: np.random.Generator
) -> DeterministicAgent:
    return _make_agent("td3", 2, obs_dim, act_dim, config, rng)


def deterministic_policy(actor: MlpParams, observations: np.ndarray) -> np.ndarray:
    return np.tanh(forward(actor, observations))


def explore_action(
    agent: DeterministicAgent, observation: np.ndarray, rng: np.random.Generator
) -> np.ndarray:
    """Policy action plus Gaussian exploration noise, clipped to [-1, 1]"""
    action = deterministic_policy(agent.actor, observation)
    noise = agent.exploration_noise * rng.standard_normal(action.shape)
    return np.clip(action + noise, -1.0, 1.0)


def ddpg_targets(agent: DeterministicAgent, batch: Batch) -> np.ndarray:
    next_actions = deterministic_policy(agent.actor_target, batch.next_observations)
    next_q = q_values(agent.critic_targets[0], batch.next_observations, next_actions)
    return bellman_targets(
        batch.rewards, batch.dones, next_q, np.zeros_like(next_q), 0.0, agent.gamma
    )


def td3_targets(agent: DeterministicAgent, batch: Batch, rng: np.random.Generator) -> np.ndarray:
    next_actions = deterministic_policy(agent.actor_target, batch.next_observations)
    noise = np.clip(
        agent.target_noise * rng.standard_normal(next_actions.shape),
        -agent.target_noise_clip,
        agent.target_noise_clip,
    )
    next_actions = np.clip(next_actions + noise, -1.0, 1.0)
    next_q = np.minimum(
        q_values(agent.critic_targets[0], batch.next_observations, next_actions),
        q_values(agent.critic_targets[1], batch.next_observations, next_actions),
    )
    return bellman_targets(
        batch.rewards, batch.dones, next_q, np.zeros_like(next_q), 0.0, agent.gamma
    )


def actor_objective(
    actor: MlpParams, critic: MlpParams, observations: np.ndarray
) -> Tuple[float, MlpParams]:
    """-mean Q(s, tanh(actor(s))) and its gradient w.r.t. the actor"""
    n, obs_dim = observations.shape
    out, cache = forward_with_cache(actor, observations)
    action = np.tanh(out)
    q, q_cache = forward_with_cache(critic, np.concatenate([observations, action], axis=1))
    loss = -float(np.mean(q))
    if not math.isfinite(loss):
        raise NonFiniteLoss(f"actor loss is {loss}")
    _, d_input = backward(critic, q_cache, np.full((n, 1), -1.0 / n))
    d_out = d_input[:, obs_dim:] * (1.0 - action * action)
    grads, _ = backward(actor, cache, d_out)
    return loss, grads


def _fit_critics(agent: DeterministicAgent, batch: Batch, targets: np.ndarray):
    critics, opts, losses = [], [], []
    for critic, opt in zip(agent.critics, agent.critic_opts):
        critic, opt, loss = fit_critic(critic, opt, batch.observations, batch.actions, targets)
        critics.append(critic)
        opts.append(opt)
        losses.append(loss)
    return tuple(critics), tuple(opts), float(np.mean(losses))


def _actor_and_targets(agent: DeterministicAgent, batch: Batch) -> Tuple[DeterministicAgent, float]:
    loss, grads = actor_objective(agent.actor, agent.critics[0], batch.observations)
    actor, opt = optimizer_step(agent.actor, grads, agent.actor_opt)
    agent = replace(
        agent,
        actor=actor,
        actor_opt=opt,
        actor_target=polyak_update(agent.actor_target, actor, agent.tau),
        critic_targets=tuple(
            polyak_update(t, c, agent.tau) for t, c in zip(agent.critic_targets, agent.critics)
        ),
    )
    return agent, loss


def baseline_update_ddpg(
    agent: DeterministicAgent, batch: Batch, rng: np.random.Generator
) -> Tuple[DeterministicAgent, UpdateStats]:
    critics, opts, critic_loss = _fit_critics(agent, batch, ddpg_targets(agent, batch))
    agent = replace(agent, critics=critics, critic_opts=opts, update_count=agent.update_count + 1)
    agent, actor_loss = _actor_and_targets(agent, batch)
    return agent, UpdateStats(critic_loss=critic_loss, actor_loss=actor_loss, alpha=0.0)


def baseline_update_td3(
    agent: DeterministicAgent, batch: Batch, rng: np.random.Generator
) -> Tuple[DeterministicAgent, UpdateStats]:
    """Critic step every call; actor and target step every policy_delay calls"""
    critics, opts, critic_loss = _fit_critics(agent, batch, td3_targets(agent, batch, rng))
    agent = replace(agent, critics=critics, critic_opts=opts, update_count=agent.update_count + 1)
    actor_loss = None
    if agent.update_count % agent.policy_delay == 0:
        agent, actor_loss = _actor_and_targets(agent, batch)
    return agent, UpdateStats(critic_loss=critic_loss, actor_loss=actor_loss, alpha=0.0)
