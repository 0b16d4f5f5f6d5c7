"""
Joint Control Module

Discrete PID actuation of the two control-link joints. pid_step is pure; the
JointServo wrapper carries the state between calls for the environment.
"""

import logging
from dataclasses import dataclass
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)


class PidGains(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kp: float = Field(60.0, ge=0)
    ki: float = Field(5.0, ge=0)
    kd: float = Field(2.0, ge=0)
    integral_limit: float = Field(0.5, gt=0)
    torque_limit: float = Field(40.0, gt=0)


@dataclass(frozen=True)
class PidState:
    integral: float = 0.0
    prev_error: float = 0.0
    initialized: bool = False


def _clamp(value: float, bound: float) -> float:
    return max(-bound, min(bound, value))


def pid_step(
    gains: PidGains, state: PidState, setpoint: float, measured: float, dt: float
) -> Tuple[float, PidState]:
    """
    One PID update.

    The integral is clamped to +/-integral_limit (anti-windup) and the
    derivative is a backward difference on the error, zero on the first call.

    Returns:
        (torque clamped to +/-torque_limit, next PidState)
    """
    if dt <= 0.0:
        raise ValueError(f"dt must be positive, got {dt}")
    error = setpoint - measured
    integral = _clamp(state.integral + error * dt, gains.integral_limit)
    derivative = (error - state.prev_error) / dt if state.initialized else 0.0
    raw = gains.kp * error + gains.ki * integral + gains.kd * derivative
    return _clamp(raw, gains.torque_limit), PidState(integral, error, True)


class JointServo:
    """Stateful PID loop around one joint"""

    def __init__(self, gains: PidGains):
        self.gains = gains
        self.state = PidState()

    def reset(self):
        self.state = PidState()

    def compute(self, setpoint: float, measured: float, dt: float) -> float:
        torque, self.state = pid_step(self.gains, self.state, setpoint, measured, dt)
        return torque
