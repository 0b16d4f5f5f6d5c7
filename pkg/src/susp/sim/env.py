"""
Step-Climbing Environment Module

Episodic MDP around the planar physics: the rover is placed on flat ground,
settled, driven to a threshold distance from a randomly sized step, and then
handed to the agent. Each agent step sets the two joint targets, runs the
physics for one control interval and scores the outcome.

Observation: [pitch deg, roll deg, distance m, height m], each clipped to +/-50.
Action: [a0, a1, a2, a3] in [-1, 1]; (a2, a3) drive the front control link,
(a0, a1) the rear one, scaled by the 37 degree joint limit.
"""

import math
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from susp.errors import EpisodeFinished
from susp.sim.control import JointServo, PidGains
from susp.sim.mechanism import JOINT_LIMIT, MechanismConfig
from susp.sim.physics import (
    MODES,
    BodyParams,
    RoverState,
    TerrainProfile,
    distance_to_obstacle,
    rest_state,
    step_dynamics,
    wheel_world_positions,
)

logger = logging.getLogger(__name__)

OBS_SIZE = 4
ACTION_SIZE = 4
OBS_BOUND = 50.0
MAX_AGENT_STEPS = 430
PITCH_FAIL_DEG = 20.0
YAW_FAIL_DEG = 10.0

REWARD_FAIL = -100.0
REWARD_CROSSED = 100.0
REWARD_TIMEOUT = -50.0


class DisturbanceConfig(BaseModel):
    """Zero-mean bounded roll/yaw noise, redrawn every agent step"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    enabled: bool = False
    amplitude: float = Field(2.0, ge=0)  # degrees


class EpisodeConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    height_range: Tuple[float, float] = (0.25, 0.32)
    max_agent_steps: int = MAX_AGENT_STEPS
    pitch_fail: float = PITCH_FAIL_DEG
    yaw_fail: float = YAW_FAIL_DEG
    threshold_distance: float = Field(1.0, gt=0)
    control_interval: float = Field(0.05, gt=0)
    crossing_margin: float = Field(0.05, ge=0)
    start_x: float = Field(1.0, gt=0)
    step_x: float = Field(3.0, gt=0)
    extent: float = Field(8.0, gt=0)
    settle_time: float = Field(2.0, ge=0)
    settle_velocity: float = Field(1e-3, gt=0)
    approach_timeout: float = Field(20.0, gt=0)
    disturbance: DisturbanceConfig = DisturbanceConfig()

    @model_validator(mode="after")
    def _check(self) -> "EpisodeConfig":
        if self.max_agent_steps != MAX_AGENT_STEPS:
            raise ValueError(f"max_agent_steps is fixed at {MAX_AGENT_STEPS}")
        if self.pitch_fail != PITCH_FAIL_DEG or self.yaw_fail != YAW_FAIL_DEG:
            raise ValueError("pitch_fail and yaw_fail are fixed at 20 and 10 degrees")
        lo, hi = self.height_range
        if not 0.0 <= lo <= hi:
            raise ValueError(f"height_range must satisfy 0 <= low <= high, got {self.height_range}")
        if not self.start_x < self.step_x < self.extent:
            raise ValueError("expected start_x < step_x < extent")
        return self


def scale_action(action: Sequence[float]) -> Tuple[float, float]:
    """(front_target, rear_target) in radians from a four-component action"""
    a = np.asarray(action, dtype=float)
    if a.shape != (ACTION_SIZE,):
        raise ValueError(f"action must have {ACTION_SIZE} components, got shape {a.shape}")
    front = 0.5 * (a[2] + a[3]) * JOINT_LIMIT
    rear = 0.5 * (a[0] + a[1]) * JOINT_LIMIT
    return float(front), float(rear)


def compute_reward(pitch: float, yaw: float, crossed: bool, steps: int) -> Tuple[float, bool]:
    """Per-step reward and termination, branches checked in order"""
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if pitch > PITCH_FAIL_DEG:
        return REWARD_FAIL, True
    if yaw > YAW_FAIL_DEG:
        return REWARD_FAIL, True
    if crossed:
        return REWARD_CROSSED, True
    if steps > MAX_AGENT_STEPS:
        return REWARD_TIMEOUT, True
    return 0.0, False


class SuspensionEnv:
    """
    Single-step-obstacle environment for one rover.

    Not thread-safe; use one instance per worker.
    """

    observation_size = OBS_SIZE
    action_size = ACTION_SIZE

    def __init__(
        self,
        mechanism: Optional[MechanismConfig] = None,
        body: Optional[BodyParams] = None,
        pid: Optional[PidGains] = None,
        episode: Optional[EpisodeConfig] = None,
        mode: str = "active",
    ):
        """
        Initialize environment.

        Args:
            mechanism: Suspension geometry and springs
            body: Physics parameters
            pid: Joint servo gains (active mode)
            episode: Episode layout, termination and disturbance settings
            mode: "active" (agent drives the joints) or "passive" (springs only, actions ignored)
        """
        if mode not in MODES:
            raise ValueError(f"unknown suspension mode '{mode}', expected one of {MODES}")
        self.mechanism = mechanism or MechanismConfig()
        self.body = body or BodyParams()
        self.pid = pid or PidGains()
        self.episode = episode or EpisodeConfig()
        self.mode = mode

        self._braked = self.body.model_copy(update={"drive_speed": 0.0})
        self._ticks = max(1, int(round(self.episode.control_interval / self.body.dt)))
        self._front = JointServo(self.pid)
        self._rear = JointServo(self.pid)
        self._rng = np.random.default_rng()

        self.state: Optional[RoverState] = None
        self.profile: Optional[TerrainProfile] = None
        self.height = 0.0
        self.steps = 0
        self.done = True
        self.agent_start_time = 0.0

    # ------------------------------------------------------------------
    # physics plumbing

    def _advance(
        self, front_target: float, rear_target: float, body: BodyParams
    ) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Run one control interval; returns per-tick (time, pitch deg, vel_x) traces"""
        assert self.state is not None and self.profile is not None
        times = np.empty(self._ticks)
        pitch = np.empty(self._ticks)
        velocity = np.empty(self._ticks)
        dt = body.dt
        state = self.state
        for i in range(self._ticks):
            if self.mode == "active":
                torques = (
                    self._rear.compute(rear_target, state.q3, dt),
                    self._front.compute(front_target, state.q4, dt),
                )
            else:
                torques = (0.0, 0.0)
            state = step_dynamics(state, self.mode, torques, self.profile, body, self.mechanism)
            times[i] = state.sim_time
            pitch[i] = math.degrees(state.chassis_pitch)
            velocity[i] = state.vel_x
        self.state = state
        return times, pitch, velocity

    def _settle(self):
        assert self.state is not None
        elapsed = 0.0
        while elapsed < self.episode.settle_time:
            self._advance(0.0, 0.0, self._braked)
            elapsed += self._ticks * self.body.dt
            if float(np.max(np.abs(self.state.rates()))) < self.episode.settle_velocity:
                break
        logger.debug(f"settled after {elapsed:.3f} s at z={self.state.chassis_z:.4f}")

    def _approach(self):
        assert self.state is not None and self.profile is not None
        elapsed = 0.0
        while self.distance() > self.episode.threshold_distance:
            if elapsed > self.episode.approach_timeout:
                raise RuntimeError(
                    f"rover did not reach {self.episode.threshold_distance} m from the step "
                    f"within {self.episode.approach_timeout} s"
                )
            self._advance(0.0, 0.0, self.body)
            elapsed += self._ticks * self.body.dt

    # ------------------------------------------------------------------
    # queries

    def distance(self) -> float:
        assert self.state is not None and self.profile is not None
        return distance_to_obstacle(self.state, self.profile, self.mechanism)

    def is_crossed(self, state: RoverState) -> bool:
        """Rearmost trailing edge past the step (plus margin) with every wheel on the top"""
        assert self.profile is not None
        wheels = wheel_world_positions(self.mechanism, state.coords())
        radius = self.mechanism.wheel_radius
        step_x = self.profile.step_x
        if float(np.min(wheels[:, 0])) - radius <= step_x + self.episode.crossing_margin:
            return False
        return all(state.wheel_contact) and bool(np.all(wheels[:, 0] >= step_x))

    def observation(self) -> np.ndarray:
        assert self.state is not None
        obs = np.array(
            [
                math.degrees(self.state.chassis_pitch),
                math.degrees(self.state.roll),
                self.distance(),
                self.height,
            ]
        )
        return np.clip(obs, -OBS_BOUND, OBS_BOUND)

    # ------------------------------------------------------------------
    # episode lifecycle

    def reset(self, seed: Optional[int] = None, height: Optional[float] = None) -> np.ndarray:
        """
        Start a new episode.

        Args:
            seed: Seed for the obstacle height and disturbance draws
            height: Fixed obstacle height (m); sampled from height_range when None

        Returns:
            First observation, taken once the rover is threshold_distance from the step
        """
        self._rng = np.random.default_rng(seed)
        lo, hi = self.episode.height_range
        self.height = float(self._rng.uniform(lo, hi)) if height is None else float(height)
        self.profile = TerrainProfile(
            step_x=self.episode.step_x, step_height=self.height, extent=self.episode.extent
        )
        self._front.reset()
        self._rear.reset()
        self.state = rest_state(self.mechanism, self.body, self.profile, self.episode.start_x)
        self._settle()
        self._approach()
        self.steps = 0
        self.done = False
        self.agent_start_time = self.state.sim_time
        logger.debug(
            f"episode reset: height={self.height:.4f} m, distance={self.distance():.4f} m, "
            f"t={self.state.sim_time:.3f} s"
        )
        return self.observation()

    def step(self, action: Sequence[float]) -> Tuple[np.ndarray, float, bool, Dict[str, Any]]:
        """
        Apply one action for one control interval.

        Returns:
            (observation, reward, done, info); info carries sim_time and the
            per-tick time/pitch/velocity traces of the interval

        Raises:
            EpisodeFinished: if the episode already ended
        """
        if self.done or self.state is None:
            raise EpisodeFinished("episode is over; call reset() first")
        clipped = np.clip(np.asarray(action, dtype=float), -1.0, 1.0)
        front, rear = scale_action(clipped)
        times, pitch_trace, velocity_trace = self._advance(front, rear, self.body)

        if self.episode.disturbance.enabled:
            amp = math.radians(self.episode.disturbance.amplitude)
            roll, yaw = self._rng.uniform(-amp, amp, size=2)
            self.state = replace(self.state, roll=float(roll), yaw=float(yaw))

        self.steps += 1
        crossed = self.is_crossed(self.state)
        pitch = math.degrees(self.state.chassis_pitch)
        yaw_deg = math.degrees(self.state.yaw)
        reward, done = compute_reward(abs(pitch), abs(yaw_deg), crossed, self.steps)
        self.done = done
        info = {
            "sim_time": self.state.sim_time,
            "time_trace": times,
            "pitch_trace": pitch_trace,
            "velocity_trace": velocity_trace,
            "crossed": crossed,
            "distance": self.distance(),
            "q3": self.state.q3,
            "q4": self.state.q4,
            "wheel_contact": self.state.wheel_contact,
        }
        return self.observation(), reward, done, info


@dataclass
class EpisodeTrace:
    """Per-agent-step and per-tick records of one evaluation episode"""

    time: List[float] = field(default_factory=list)
    pitch: List[float] = field(default_factory=list)
    velocity: List[float] = field(default_factory=list)
    q3: List[float] = field(default_factory=list)
    q4: List[float] = field(default_factory=list)
    reward: List[float] = field(default_factory=list)
    tick_time: List[float] = field(default_factory=list)
    tick_pitch: List[float] = field(default_factory=list)
    tick_velocity: List[float] = field(default_factory=list)
    success: bool = False
    peak_pitch: float = 0.0
    crossing_velocity: float = 0.0

    @property
    def total_reward(self) -> float:
        return float(sum(self.reward))

    @property
    def length(self) -> int:
        return len(self.reward)


@dataclass
class EvaluationResult:
    traces: List[EpisodeTrace]

    @property
    def success_rate(self) -> float:
        return sum(t.success for t in self.traces) / len(self.traces) if self.traces else 0.0

    @property
    def peak_pitch(self) -> float:
        return max((t.peak_pitch for t in self.traces), default=0.0)

    @property
    def mean_crossing_velocity(self) -> float:
        return float(np.mean([t.crossing_velocity for t in self.traces])) if self.traces else 0.0


def run_episode(
    env: SuspensionEnv,
    act_fn: Callable[[np.ndarray], np.ndarray],
    seed: Optional[int] = None,
    height: Optional[float] = None,
) -> EpisodeTrace:
    """Roll out one episode with act_fn and record its traces"""
    obs = env.reset(seed=seed, height=height)
    trace = EpisodeTrace()
    window: List[float] = []
    engaged = False
    done = False
    while not done:
        obs, reward, done, info = env.step(act_fn(obs))
        trace.time.append(env.steps * env.episode.control_interval)
        trace.pitch.append(float(obs[0]))
        trace.velocity.append(float(env.state.vel_x))
        trace.q3.append(math.degrees(info["q3"]))
        trace.q4.append(math.degrees(info["q4"]))
        trace.reward.append(reward)
        trace.tick_time.extend((info["time_trace"] - env.agent_start_time).tolist())
        trace.tick_pitch.extend(info["pitch_trace"].tolist())
        trace.tick_velocity.extend(info["velocity_trace"].tolist())
        # crossing window opens when the front wheel reaches the face
        engaged = engaged or info["distance"] <= 0.0
        if engaged:
            window.extend(info["velocity_trace"].tolist())
        if info["crossed"]:
            trace.success = True
    trace.peak_pitch = max((abs(p) for p in trace.tick_pitch), default=0.0)
    trace.crossing_velocity = float(np.mean(window)) if window else 0.0
    return trace


def evaluate_policy(
    env: SuspensionEnv,
    act_fn: Callable[[np.ndarray], np.ndarray],
    episodes: int,
    height: Optional[float] = None,
    seed: int = 0,
) -> EvaluationResult:
    """
    Run noise-free episodes at a fixed obstacle height.

    Args:
        env: Environment (its mode decides active or passive suspension)
        act_fn: Observation -> action
        episodes: Number of episodes, seeded seed, seed+1, ...
        height: Obstacle height (m); sampled per episode when None
        seed: First episode seed
    """
    if episodes < 1:
        raise ValueError(f"episodes must be >= 1, got {episodes}")
    traces = []
    for i in range(episodes):
        trace = run_episode(env, act_fn, seed=seed + i, height=height)
        logger.info(
            f"episode {i}: success={trace.success} steps={trace.length} "
            f"peak_pitch={trace.peak_pitch:.2f} deg"
        )
        traces.append(trace)
    return EvaluationResult(traces)
