"""Shared fixtures for the susp test suite."""

import numpy as np
import pytest

from susp.learning.approx import NetworkConfig
from susp.learning.config import RlConfig
from susp.sim.env import EpisodeConfig
from susp.sim.mechanism import MechanismConfig
from susp.sim.physics import BodyParams, TerrainProfile


@pytest.fixture
def mechanism():
    return MechanismConfig()


@pytest.fixture
def body():
    return BodyParams()


@pytest.fixture
def flat_profile():
    # step far enough away that nothing in a short run reaches it
    return TerrainProfile(step_x=9.0, step_height=0.0, extent=10.0)


@pytest.fixture
def quick_episode():
    """Short settle and a short approach so a reset costs a fraction of a second"""
    return EpisodeConfig(start_x=1.0, step_x=2.6, extent=5.0, settle_time=0.1)


@pytest.fixture
def tiny_rl():
    return RlConfig(
        batch_size=8,
        replay_capacity=500,
        warmup_steps=10,
        log_interval=10,
        network=NetworkConfig(hidden_sizes=(8, 8)),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


class ToyEnv:
    """
    Cheap stand-in for SuspensionEnv with the same interface.

    The observation drifts with the action; the episode ends with +100 once
    the drift passes 3, or with -50 after `horizon` steps.
    """

    observation_size = 4
    action_size = 4

    def __init__(self, horizon: int = 12):
        self.horizon = horizon
        self.steps = 0
        self.position = 0.0
        self._rng = np.random.default_rng()

    def _obs(self):
        return np.array([self.position, 0.0, 3.0 - self.position, 0.3])

    def reset(self, seed=None, height=None):
        self._rng = np.random.default_rng(seed)
        self.position = float(self._rng.uniform(-0.1, 0.1))
        self.steps = 0
        return self._obs()

    def step(self, action):
        self.steps += 1
        self.position += 0.5 * float(np.mean(action)) + 0.1
        if self.position > 3.0:
            return self._obs(), 100.0, True, {}
        if self.steps >= self.horizon:
            return self._obs(), -50.0, True, {}
        return self._obs(), 0.0, False, {}


@pytest.fixture
def toy_env():
    return ToyEnv()
