"""
Soft Actor-Critic Module

Maximum-entropy off-policy learning with a tanh-squashed Gaussian policy,
twin soft Q critics with Polyak-averaged targets, and a learned temperature.
Every update is a pure function: it takes an agent value and returns a new one.
"""

import math
import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

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

logger = logging.getLogger(__name__)

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_2 = math.log(2.0)


@dataclass(frozen=True)
class SacAgent:
    policy: MlpParams
    critic1: MlpParams
    critic2: MlpParams
    target1: MlpParams
    target2: MlpParams
    log_alpha: float
    target_entropy: float
    gamma: float
    tau: float
    batch_size: int
    auto_alpha: bool
    policy_opt: OptimizerState
    critic1_opt: OptimizerState
    critic2_opt: OptimizerState
    alpha_opt: OptimizerState

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    @property
    def obs_dim(self) -> int:
        return self.policy.sizes[0]

    @property
    def act_dim(self) -> int:
        return self.policy.sizes[-1] // 2


@dataclass(frozen=True)
class UpdateStats:
    """Losses of one gradient step; actor_loss is None when the actor was not updated"""

    critic_loss: float
    actor_loss: Optional[float]
    alpha: float
    alpha_loss: float = 0.0


def make_sac_agent(
    obs_dim: int, act_dim: int, config: RlConfig, rng: np.random.Generator
) -> SacAgent:
    hidden = list(config.network.hidden_sizes)
    policy = init_mlp([obs_dim, *hidden, 2 * act_dim], rng, config.network.policy_output_scale)
    critic1 = init_mlp([obs_dim + act_dim, *hidden, 1], rng)
    critic2 = init_mlp([obs_dim + act_dim, *hidden, 1], rng)
    log_alpha = math.log(config.alpha_init)
    target_entropy = (
        -float(act_dim) if config.target_entropy is None else float(config.target_entropy)
    )

    def adam(params, lr):
        return init_optimizer(params, lr, config.beta1, config.beta2, config.adam_eps)

    return SacAgent(
        policy=policy,
        critic1=critic1,
        critic2=critic2,
        target1=critic1.copy(),
        target2=critic2.copy(),
        log_alpha=log_alpha,
        target_entropy=target_entropy,
        gamma=config.gamma,
        tau=config.tau,
        batch_size=config.batch_size,
        auto_alpha=config.auto_alpha,
        policy_opt=adam(policy, config.lr_actor),
        critic1_opt=adam(critic1, config.lr_critic),
        critic2_opt=adam(critic2, config.lr_critic),
        alpha_opt=adam([np.array([log_alpha])], config.lr_alpha),
    )


# ----------------------------------------------------------------------
# policy


def policy_heads(
    policy: MlpParams, observations: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, object]:
    """(mean, clamped log_std, raw log_std, forward cache) for a batch of observations"""
    out, cache = forward_with_cache(policy, np.atleast_2d(observations))
    act_dim = out.shape[1] // 2
    mean = out[:, :act_dim]
    raw = out[:, act_dim:]
    return mean, np.clip(raw, LOG_STD_MIN, LOG_STD_MAX), raw, cache


def squash(
    mean: np.ndarray, log_std: np.ndarray, noise: np.ndarray
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Reparameterised tanh-Gaussian sample.

    Returns:
        (pre-tanh u, action tanh(u), log-density of the action summed over dimensions)
    """
    u = mean + np.exp(log_std) * noise
    action = np.tanh(u)
    # log(1 - tanh(u)^2) written in a form that stays finite for large |u|
    log_jac = 2.0 * (_LOG_2 - u - np.logaddexp(0.0, -2.0 * u))
    log_prob = np.sum(-0.5 * noise * noise - log_std - _HALF_LOG_2PI - log_jac, axis=-1)
    return u, action, log_prob


def sample_action(policy: MlpParams, observation: np.ndarray, rng: np.random.Generator):
    """
    Draw a ~ pi(.|s).

    A single observation gives (action vector, float log_prob); a batch gives
    (actions, log_probs) arrays.
    """
    mean, log_std, _, _ = policy_heads(policy, observation)
    noise = rng.standard_normal(mean.shape)
    _, action, log_prob = squash(mean, log_std, noise)
    if np.ndim(observation) == 1:
        return action[0], float(log_prob[0])
    return action, log_prob


def act_deterministic(policy: MlpParams, observation: np.ndarray) -> np.ndarray:
    """Noise-free evaluation action tanh(mean)"""
    mean, _, _, _ = policy_heads(policy, observation)
    return np.tanh(mean[0]) if np.ndim(observation) == 1 else np.tanh(mean)


# ----------------------------------------------------------------------
# critics


def q_values(critic: MlpParams, observations: np.ndarray, actions: np.ndarray) -> np.ndarray:
    inputs = np.concatenate([np.atleast_2d(observations), np.atleast_2d(actions)], axis=1)
    return forward(critic, inputs)[:, 0]


def twin_min(
    critic1: MlpParams, critic2: MlpParams, observations: np.ndarray, actions: np.ndarray
) -> np.ndarray:
    return np.minimum(
        q_values(critic1, observations, actions), q_values(critic2, observations, actions)
    )


def soft_value(
    critic1: MlpParams,
    critic2: MlpParams,
    policy: MlpParams,
    alpha: float,
    observation: np.ndarray,
    rng: np.random.Generator,
) -> float:
    """Single-sample estimate of min(Q1, Q2)(s, a) - alpha * log pi(a|s), a ~ pi"""
    action, log_prob = sample_action(policy, observation, rng)
    q = twin_min(critic1, critic2, observation, action)[0]
    return float(q - alpha * log_prob)


def bellman_targets(
    rewards: np.ndarray,
    dones: np.ndarray,
    next_q: np.ndarray,
    next_log_prob: np.ndarray,
    alpha: float,
    gamma: float,
) -> np.ndarray:
    """r + gamma * (1 - done) * (next_q - alpha * next_log_prob)"""
    return rewards + gamma * (1.0 - dones) * (next_q - alpha * next_log_prob)


def sac_targets(agent: SacAgent, batch: Batch, rng: np.random.Generator) -> np.ndarray:
    next_actions, next_log_prob = sample_action(agent.policy, batch.next_observations, rng)
    next_q = twin_min(agent.target1, agent.target2, batch.next_observations, next_actions)
    return bellman_targets(
        batch.rewards, batch.dones, next_q, next_log_prob, agent.alpha, agent.gamma
    )


def critic_loss(
    critic: MlpParams, observations: np.ndarray, actions: np.ndarray, targets: np.ndarray
) -> Tuple[float, MlpParams]:
    """Mean squared Bellman residual and its gradient; targets are constants"""
    inputs = np.concatenate([observations, actions], axis=1)
    q, cache = forward_with_cache(critic, inputs)
    residual = q[:, 0] - targets
    loss = float(np.mean(residual * residual))
    if not math.isfinite(loss):
        raise NonFiniteLoss(f"critic loss is {loss}")
    grads, _ = backward(critic, cache, (2.0 * residual / len(targets))[:, None])
    return loss, grads


def fit_critic(
    critic: MlpParams,
    opt: OptimizerState,
    observations: np.ndarray,
    actions: np.ndarray,
    targets: np.ndarray,
) -> Tuple[MlpParams, OptimizerState, float]:
    loss, grads = critic_loss(critic, observations, actions, targets)
    critic, opt = optimizer_step(critic, grads, opt)
    return critic, opt, loss


def critic_update(
    agent: SacAgent, batch: Batch, rng: np.random.Generator
) -> Tuple[SacAgent, Tuple[float, float]]:
    """One step on each critic toward the soft Bellman targets"""
    targets = sac_targets(agent, batch, rng)
    c1, o1, loss1 = fit_critic(
        agent.critic1, agent.critic1_opt, batch.observations, batch.actions, targets
    )
    c2, o2, loss2 = fit_critic(
        agent.critic2, agent.critic2_opt, batch.observations, batch.actions, targets
    )
    return replace(agent, critic1=c1, critic2=c2, critic1_opt=o1, critic2_opt=o2), (loss1, loss2)


# ----------------------------------------------------------------------
# actor and temperature


def policy_objective(
    policy: MlpParams,
    critic1: MlpParams,
    critic2: MlpParams,
    alpha: float,
    observations: np.ndarray,
    noise: np.ndarray,
) -> Tuple[float, MlpParams]:
    """
    Reparameterised actor loss mean(alpha * log pi(a|s) - min Q(s, a)) and its
    gradient w.r.t. the policy, for fixed standard-normal noise.
    """
    observations = np.atleast_2d(observations)
    n = observations.shape[0]
    obs_dim = observations.shape[1]
    mean, log_std, raw, cache = policy_heads(policy, observations)
    std = np.exp(log_std)
    u, action, log_prob = squash(mean, log_std, noise)

    inputs = np.concatenate([observations, action], axis=1)
    q1, cache1 = forward_with_cache(critic1, inputs)
    q2, cache2 = forward_with_cache(critic2, inputs)
    first = q1[:, 0] <= q2[:, 0]
    q = np.where(first, q1[:, 0], q2[:, 0])
    loss = float(np.mean(alpha * log_prob - q))
    if not math.isfinite(loss):
        raise NonFiniteLoss(f"actor loss is {loss}")

    w1 = first.astype(float)
    _, d1 = backward(critic1, cache1, (-w1 / n)[:, None])
    _, d2 = backward(critic2, cache2, (-(1.0 - w1) / n)[:, None])
    d_action = d1[:, obs_dim:] + d2[:, obs_dim:]
    # d log pi / du = 2 tanh(u) per dimension
    d_u = d_action * (1.0 - action * action) + (alpha / n) * 2.0 * action
    d_log_std = d_u * std * noise - alpha / n
    d_log_std = d_log_std * ((raw > LOG_STD_MIN) & (raw < LOG_STD_MAX))
    grads, _ = backward(policy, cache, np.concatenate([d_u, d_log_std], axis=1))
    return loss, grads


def policy_update(
    agent: SacAgent, batch: Batch, rng: np.random.Generator
) -> Tuple[SacAgent, float]:
    noise = rng.standard_normal((len(batch), agent.act_dim))
    loss, grads = policy_objective(
        agent.policy, agent.critic1, agent.critic2, agent.alpha, batch.observations, noise
    )
    policy, opt = optimizer_step(agent.policy, grads, agent.policy_opt)
    return replace(agent, policy=policy, policy_opt=opt), loss


def temperature_objective(
    log_alpha: float, log_probs: np.ndarray, target_entropy: float
) -> Tuple[float, float]:
    """J = mean(-alpha * (log pi + target_entropy)) and dJ/dlog_alpha"""
    alpha = math.exp(log_alpha)
    term = float(np.mean(log_probs + target_entropy))
    return -alpha * term, -alpha * term


def temperature_update(
    agent: SacAgent, batch: Batch, rng: np.random.Generator
) -> Tuple[SacAgent, float]:
    _, log_probs = sample_action(agent.policy, batch.observations, rng)
    loss, grad = temperature_objective(agent.log_alpha, log_probs, agent.target_entropy)
    if not agent.auto_alpha:
        return agent, loss
    (log_alpha,), opt = optimizer_step(
        [np.array([agent.log_alpha])], [np.array([grad])], agent.alpha_opt
    )
    return replace(agent, log_alpha=float(log_alpha[0]), alpha_opt=opt), loss


def update_targets(agent: SacAgent) -> SacAgent:
    return replace(
        agent,
        target1=polyak_update(agent.target1, agent.critic1, agent.tau),
        target2=polyak_update(agent.target2, agent.critic2, agent.tau),
    )


def sac_update(
    agent: SacAgent, batch: Batch, rng: np.random.Generator
) -> Tuple[SacAgent, UpdateStats]:
    """Critics, then actor, then temperature, then targets"""
    agent, (loss1, loss2) = critic_update(agent, batch, rng)
    agent, actor_loss = policy_update(agent, batch, rng)
    agent, alpha_loss = temperature_update(agent, batch, rng)
    agent = update_targets(agent)
    return agent, UpdateStats(
        critic_loss=0.5 * (loss1 + loss2),
        actor_loss=actor_loss,
        alpha=agent.alpha,
        alpha_loss=alpha_loss,
    )
