"""
Training Loop Module

Off-policy training orchestration: environment interaction, replay storage,
gradient steps and periodic metric rows. One Trainer owns its agent, pool and
environment; runs with different seeds share nothing.
"""

import time
import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from tqdm import tqdm

from susp.learning.baselines import (
    DeterministicAgent,
    baseline_update_ddpg,
    baseline_update_td3,
    deterministic_policy,
    explore_action,
    make_ddpg_agent,
    make_td3_agent,
)
from susp.learning.config import ALGORITHMS, RlConfig
from susp.learning.replay import Batch, ReplayPool
from susp.learning.sac import (
    SacAgent,
    UpdateStats,
    act_deterministic,
    make_sac_agent,
    sac_update,
    sample_action,
)
from susp.sim.env import SuspensionEnv

logger = logging.getLogger(__name__)

Agent = Union[SacAgent, DeterministicAgent]

METRICS_COLUMNS = ("step", "ep_rew_mean", "ep_len_mean", "actor_loss", "critic_loss", "ent_coef")

_FACTORIES: Dict[str, Callable[..., Agent]] = {
    "sac": make_sac_agent,
    "ddpg": make_ddpg_agent,
    "td3": make_td3_agent,
}


@dataclass(frozen=True)
class SeedStreams:
    """Independent generators derived from one run seed"""

    init: np.random.Generator
    episodes: np.random.Generator
    actions: np.random.Generator
    updates: np.random.Generator

    @classmethod
    def from_seed(cls, seed: int) -> "SeedStreams":
        children = np.random.SeedSequence(seed).spawn(4)
        return cls(*(np.random.default_rng(c) for c in children))


def make_agent(
    algo: str, obs_dim: int, act_dim: int, config: RlConfig, rng: np.random.Generator
) -> Agent:
    if algo not in _FACTORIES:
        raise ValueError(f"unsupported algorithm '{algo}', expected one of {ALGORITHMS}")
    return _FACTORIES[algo](obs_dim, act_dim, config, rng)


def exploration_action(agent: Agent, observation: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    if isinstance(agent, SacAgent):
        return sample_action(agent.policy, observation, rng)[0]
    return explore_action(agent, observation, rng)


def evaluation_action(agent: Agent, observation: np.ndarray) -> np.ndarray:
    if isinstance(agent, SacAgent):
        return act_deterministic(agent.policy, observation)
    return deterministic_policy(agent.actor, observation)


def update_agent(agent: Agent, batch: Batch, rng: np.random.Generator) -> Tuple[Agent, UpdateStats]:
    if isinstance(agent, SacAgent):
        return sac_update(agent, batch, rng)
    if agent.kind == "td3":
        return baseline_update_td3(agent, batch, rng)
    return baseline_update_ddpg(agent, batch, rng)


def entropy_coefficient(agent: Agent) -> float:
    return agent.alpha if isinstance(agent, SacAgent) else 0.0


@dataclass(frozen=True)
class MetricsRow:
    step: int
    ep_rew_mean: float
    ep_len_mean: float
    actor_loss: float
    critic_loss: float
    ent_coef: float

    def values(self) -> Tuple[float, ...]:
        return tuple(getattr(self, c) for c in METRICS_COLUMNS)


@dataclass(frozen=True)
class EpisodeRecord:
    end_step: int
    total_reward: float
    length: int


@dataclass
class RunMetrics:
    rows: List[MetricsRow] = field(default_factory=list)
    episodes: List[EpisodeRecord] = field(default_factory=list)
    gradient_steps: int = 0
    wall_time: float = 0.0


class Trainer:
    """
    Runs one training job.

    Uniform-random actions fill the pool for the first warmup_steps
    environment steps; after that every environment step is followed by
    gradient_steps agent updates on uniformly sampled batches.
    """

    def __init__(
        self,
        agent: Agent,
        env: SuspensionEnv,
        config: RlConfig,
        seed: int,
        progress: bool = False,
    ):
        """
        Initialize trainer.

        Args:
            agent: Initial agent (SAC, DDPG or TD3)
            env: Environment to interact with
            config: Training hyperparameters
            seed: Run seed; drives episode seeds, exploration and batch sampling
            progress: Show a tqdm progress bar
        """
        self.agent = agent
        self.env = env
        self.config = config
        self.seed = seed
        self.progress = progress
        self.streams = SeedStreams.from_seed(seed)
        self.pool = ReplayPool(config.replay_capacity, env.observation_size, env.action_size)
        self.metrics = RunMetrics()

        self._returns: deque = deque(maxlen=config.reward_window)
        self._lengths: deque = deque(maxlen=config.reward_window)
        self._actor_loss = 0.0
        self._critic_loss = 0.0

    def _episode_seed(self) -> int:
        return int(self.streams.episodes.integers(0, 2**31 - 1))

    def _record_row(self, step: int):
        row = MetricsRow(
            step=step,
            ep_rew_mean=float(np.mean(self._returns)) if self._returns else 0.0,
            ep_len_mean=float(np.mean(self._lengths)) if self._lengths else 0.0,
            actor_loss=self._actor_loss,
            critic_loss=self._critic_loss,
            ent_coef=entropy_coefficient(self.agent),
        )
        self.metrics.rows.append(row)
        logger.info(
            f"step {step}: ep_rew_mean={row.ep_rew_mean:.2f} ep_len_mean={row.ep_len_mean:.1f} "
            f"actor_loss={row.actor_loss:.4f} critic_loss={row.critic_loss:.4f} "
            f"ent_coef={row.ent_coef:.4f}"
        )

    def _gradient_phase(self):
        cfg = self.config
        for _ in range(cfg.gradient_steps):
            batch = self.pool.sample(cfg.batch_size, self.streams.updates)
            self.agent, stats = update_agent(self.agent, batch, self.streams.updates)
            self._critic_loss = stats.critic_loss
            if stats.actor_loss is not None:
                self._actor_loss = stats.actor_loss
            self.metrics.gradient_steps += 1

    def run(self, total_steps: int) -> RunMetrics:
        """
        Train for total_steps environment steps.

        Returns:
            RunMetrics with one row every log_interval steps and one record per finished episode
        """
        if total_steps <= 0:
            raise ValueError(f"total_steps must be positive, got {total_steps}")
        cfg = self.config
        started = time.monotonic()
        obs = self.env.reset(seed=self._episode_seed())
        episode_return = 0.0
        episode_length = 0

        bar = tqdm(total=total_steps, desc="Training", unit="step", disable=not self.progress)
        try:
            for step in range(1, total_steps + 1):
                if step <= cfg.warmup_steps:
                    action = self.streams.actions.uniform(-1.0, 1.0, size=self.env.action_size)
                else:
                    action = exploration_action(self.agent, obs, self.streams.actions)
                next_obs, reward, done, _ = self.env.step(action)
                self.pool.add(obs, action, reward, next_obs, done)
                episode_return += reward
                episode_length += 1

                if done:
                    self.metrics.episodes.append(EpisodeRecord(step, episode_return, episode_length))
                    self._returns.append(episode_return)
                    self._lengths.append(episode_length)
                    logger.debug(
                        f"episode {len(self.metrics.episodes)} ended at step {step}: "
                        f"return={episode_return:.0f} length={episode_length}"
                    )
                    obs = self.env.reset(seed=self._episode_seed())
                    episode_return = 0.0
                    episode_length = 0
                else:
                    obs = next_obs

                if step > cfg.warmup_steps and len(self.pool) >= cfg.batch_size:
                    self._gradient_phase()

                if step % cfg.log_interval == 0:
                    self._record_row(step)
                bar.update(1)
        finally:
            bar.close()

        self.metrics.wall_time = time.monotonic() - started
        logger.info(
            f"training finished: {total_steps} steps, {len(self.metrics.episodes)} episodes, "
            f"{self.metrics.gradient_steps} gradient steps in {self.metrics.wall_time:.1f} s"
        )
        return self.metrics


def train(
    agent: Agent,
    env: SuspensionEnv,
    total_steps: int,
    seed: int,
    config: Optional[RlConfig] = None,
    progress: bool = False,
) -> Tuple[Agent, RunMetrics]:
    """Train agent in env; returns the trained agent and its RunMetrics"""
    trainer = Trainer(agent, env, config or RlConfig(), seed, progress=progress)
    metrics = trainer.run(total_steps)
    return trainer.agent, metrics
