"""
Harness Commands

train / eval / compare / gradcheck as plain functions over a resolved
RunConfig. Each one first writes config.resolved into config.out, then its
result files, and returns data; printing and exit codes are left to
harness.main.
"""

import os
import time
import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from susp.errors import ConfigError
from susp.harness.config import RunConfig, save_resolved
from susp.harness.gradcheck import CheckResult, run_gradcheck
from susp.harness.output_handler import write_compare_csv, write_metrics_csv, write_trace_csv
from susp.learning.checkpoint import algo_of, load_checkpoint, save_checkpoint
from susp.learning.trainer import (
    Agent,
    RunMetrics,
    SeedStreams,
    evaluation_action,
    make_agent,
    train,
)
from susp.sim.env import EpisodeTrace, EvaluationResult, SuspensionEnv, evaluate_policy, run_episode

logger = logging.getLogger(__name__)

CHECKPOINT_NAME = "checkpoint.bin"
METRICS_NAME = "metrics.csv"
COMPARE_NAME = "compare.csv"


def build_env(config: RunConfig, mode: Optional[str] = None) -> SuspensionEnv:
    return SuspensionEnv(
        mechanism=config.mechanism,
        body=config.physics,
        pid=config.pid,
        episode=config.env,
        mode=mode or config.suspension,
    )


def _load_agent(path: str, env: SuspensionEnv) -> Agent:
    agent, _ = load_checkpoint(path, obs_dim=env.observation_size, act_dim=env.action_size)
    return agent


def _prepare_out(config: RunConfig):
    os.makedirs(config.out, exist_ok=True)
    save_resolved(config, config.out)


@dataclass
class TrainOutcome:
    agent: Agent
    metrics: RunMetrics
    checkpoint_path: str
    metrics_path: str


def cmd_train(
    config: RunConfig,
    save_path: Optional[str] = None,
    load_path: Optional[str] = None,
    progress: bool = False,
) -> TrainOutcome:
    """
    Train config.algo for config.steps environment steps.

    Writes metrics.csv, the checkpoint (save_path or <out>/checkpoint.bin) and
    config.resolved into config.out. load_path warm-starts from a checkpoint.
    """
    started = time.monotonic()
    _prepare_out(config)
    env = build_env(config)
    if load_path:
        agent = _load_agent(load_path, env)
        if algo_of(agent) != config.algo:
            raise ConfigError(
                f"checkpoint {load_path} holds a {algo_of(agent)} agent, config asks for {config.algo}"
            )
    else:
        streams = SeedStreams.from_seed(config.seed)
        agent = make_agent(config.algo, env.observation_size, env.action_size, config.rl, streams.init)
    logger.info(
        f"training {config.algo} ({config.suspension} suspension) for {config.steps} steps, "
        f"seed {config.seed}"
    )
    agent, metrics = train(agent, env, config.steps, config.seed, config.rl, progress=progress)

    metrics_path = os.path.join(config.out, METRICS_NAME)
    write_metrics_csv(metrics_path, metrics)
    checkpoint_path = save_path or os.path.join(config.out, CHECKPOINT_NAME)
    save_checkpoint(
        checkpoint_path,
        agent,
        meta={"seed": config.seed, "steps": config.steps, "suspension": config.suspension},
    )
    logger.info(f"train finished in {time.monotonic() - started:.1f} s")
    return TrainOutcome(agent, metrics, checkpoint_path, metrics_path)


def cmd_eval(
    config: RunConfig, checkpoint: str, episodes: int, height: float
) -> EvaluationResult:
    """Noise-free episodes at a fixed height; writes trace_<i>.csv into config.out"""
    started = time.monotonic()
    _prepare_out(config)
    env = build_env(config)
    agent = _load_agent(checkpoint, env)
    result = evaluate_policy(
        env, lambda obs: evaluation_action(agent, obs), episodes, height=height, seed=config.seed
    )
    for i, trace in enumerate(result.traces):
        write_trace_csv(os.path.join(config.out, f"trace_{i}.csv"), trace)
    logger.info(f"eval finished in {time.monotonic() - started:.1f} s")
    return result


@dataclass
class Comparison:
    active: EpisodeTrace
    passive: EpisodeTrace
    path: str

    @property
    def reduction(self) -> float:
        return self.passive.peak_pitch - self.active.peak_pitch


def cmd_compare(config: RunConfig, checkpoint: str, height: float) -> Comparison:
    """
    One active episode with the trained policy and one passive (springs only)
    episode at the same height and seed; writes compare.csv.
    """
    started = time.monotonic()
    _prepare_out(config)
    active_env = build_env(config, mode="active")
    agent = _load_agent(checkpoint, active_env)
    active = run_episode(
        active_env, lambda obs: evaluation_action(agent, obs), seed=config.seed, height=height
    )
    passive_env = build_env(config, mode="passive")
    idle = np.zeros(passive_env.action_size)
    passive = run_episode(passive_env, lambda obs: idle, seed=config.seed, height=height)

    path = os.path.join(config.out, COMPARE_NAME)
    write_compare_csv(path, active, passive)
    logger.info(f"compare finished in {time.monotonic() - started:.1f} s")
    return Comparison(active, passive, path)


def cmd_gradcheck(config: RunConfig, perturb: bool = False) -> List[CheckResult]:
    started = time.monotonic()
    _prepare_out(config)
    results = run_gradcheck(seed=config.seed, perturb=perturb)
    logger.info(f"gradcheck finished in {time.monotonic() - started:.1f} s")
    return results
