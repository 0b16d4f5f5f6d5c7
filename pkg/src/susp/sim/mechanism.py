"""
Five-Bar Mechanism Module

Closed-form kinematics of one side of the planar five-bar suspension.

Frame convention (the "mechanism frame", fixed to the chassis): x points
forward, z points up, origin at the chassis reference point. Links 3 and 4
are the chassis-mounted control links (rear and front), links 1 and 2 are
the wheel links that meet at the middle wheel M, the chassis is link 5.
Control-link angles are measured from the downward vertical, counter-clockwise
positive, so q4 > 0 swings the front joint C forward.
"""

import math
import logging
from dataclasses import dataclass
from typing import Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

from susp.errors import JointLimitError, Unreachable

logger = logging.getLogger(__name__)

Point = Tuple[float, float]
# (x, z, pitch) of the chassis reference point in the world frame
ChassisPose = Tuple[float, float, float]

JOINT_LIMIT = math.radians(37.0)
_LIMIT_TOL = 1e-12


class MechanismConfig(BaseModel):
    """
    Geometry and passive-spring parameters of the five-bar suspension.

    Lengths are in metres, angles in radians, spring rates in N*m/rad.
    ext_bend_front / ext_bend_rear bend the wheel-carrying extensions of
    links 1 and 2 away from the link axis (0 keeps them collinear).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    chassis_pivot_front: Point = (0.25, -0.05)
    chassis_pivot_rear: Point = (-0.25, -0.05)
    len_link1: float = Field(0.40, gt=0)
    len_link2: float = Field(0.40, gt=0)
    len_link3: float = Field(0.20, gt=0)
    len_link4: float = Field(0.20, gt=0)
    ext_link1: float = Field(0.35, ge=0)
    ext_link2: float = Field(0.35, ge=0)
    ext_bend_front: float = Field(2.0, ge=-math.pi, le=math.pi)
    ext_bend_rear: float = Field(2.0, ge=-math.pi, le=math.pi)
    wheel_radius: float = Field(0.10, gt=0)
    spring_rate_front: float = Field(30.0, ge=0)
    spring_rate_rear: float = Field(30.0, ge=0)
    spring_rest_front: float = 0.0
    spring_rest_rear: float = 0.0
    joint_limit: float = JOINT_LIMIT

    @model_validator(mode="after")
    def _check_geometry(self) -> "MechanismConfig":
        if abs(self.joint_limit - JOINT_LIMIT) > _LIMIT_TOL:
            raise ValueError("joint_limit is fixed at 37 degrees")
        if self.chassis_pivot_front[0] <= self.chassis_pivot_rear[0]:
            raise ValueError("chassis_pivot_front must lie ahead of chassis_pivot_rear")
        for rest in (self.spring_rest_front, self.spring_rest_rear):
            if abs(rest) > self.joint_limit:
                raise ValueError("spring rest angles must lie inside the joint limit")
        return self


@dataclass(frozen=True)
class MechanismPose:
    """Solved configuration of the loop, all points in the mechanism frame"""

    q3: float
    q4: float
    theta1: float
    theta2: float
    joint_c: Point
    joint_d: Point
    joint_m: Point
    wheel_front: Point
    wheel_mid: Point
    wheel_rear: Point

    @property
    def wheels(self) -> Tuple[Point, Point, Point]:
        return (self.wheel_front, self.wheel_mid, self.wheel_rear)


def _close_loop(config: MechanismConfig, q3: float, q4: float) -> MechanismPose:
    # Limits are not checked here: finite-difference Jacobians step a hair past the stops.
    fx, fz = config.chassis_pivot_front
    rx, rz = config.chassis_pivot_rear
    cx = fx + config.len_link4 * math.sin(q4)
    cz = fz - config.len_link4 * math.cos(q4)
    dx = rx + config.len_link3 * math.sin(q3)
    dz = rz - config.len_link3 * math.cos(q3)

    l1, l2 = config.len_link1, config.len_link2
    ux, uz = dx - cx, dz - cz
    dist = math.hypot(ux, uz)
    if dist == 0.0 or dist > l1 + l2 or dist < abs(l1 - l2):
        raise Unreachable(
            f"loop cannot close at q3={q3:.4f}, q4={q4:.4f} (|CD|={dist:.4f})"
        )

    ux, uz = ux / dist, uz / dist
    along = (l1 * l1 - l2 * l2 + dist * dist) / (2.0 * dist)
    half = math.sqrt(max(l1 * l1 - along * along, 0.0))
    bx, bz = cx + along * ux, cz + along * uz
    # Of the two intersections take the one below segment CD (knee down).
    px, pz = -uz, ux
    sign = -1.0 if pz > 0.0 else 1.0
    mx, mz = bx + sign * half * px, bz + sign * half * pz

    theta1 = math.atan2(cz - mz, cx - mx)
    theta2 = math.atan2(dz - mz, dx - mx)
    front_dir = theta1 - config.ext_bend_front
    rear_dir = theta2 + config.ext_bend_rear
    wheel_front = (
        cx + config.ext_link1 * math.cos(front_dir),
        cz + config.ext_link1 * math.sin(front_dir),
    )
    wheel_rear = (
        dx + config.ext_link2 * math.cos(rear_dir),
        dz + config.ext_link2 * math.sin(rear_dir),
    )
    return MechanismPose(
        q3=q3,
        q4=q4,
        theta1=theta1,
        theta2=theta2,
        joint_c=(cx, cz),
        joint_d=(dx, dz),
        joint_m=(mx, mz),
        wheel_front=wheel_front,
        wheel_mid=(mx, mz),
        wheel_rear=wheel_rear,
    )


def solve_loop_closure(config: MechanismConfig, q3: float, q4: float) -> MechanismPose:
    """
    Solve the five-bar loop for the given control-link angles.

    Args:
        config: Mechanism geometry
        q3: Rear control-link angle (rad)
        q4: Front control-link angle (rad)

    Returns:
        MechanismPose with joints, link angles and wheel centres in the mechanism frame

    Raises:
        JointLimitError: if |q3| or |q4| exceeds the joint limit
        Unreachable: if the wheel links cannot meet
    """
    limit = config.joint_limit + _LIMIT_TOL
    if abs(q3) > limit or abs(q4) > limit:
        raise JointLimitError(
            f"control-link angles ({math.degrees(q3):.2f}, {math.degrees(q4):.2f}) deg "
            f"outside +/-{math.degrees(config.joint_limit):.0f} deg"
        )
    return _close_loop(config, q3, q4)


def to_world(point: Point, chassis_pose: ChassisPose) -> Point:
    """Map a mechanism-frame point into the world frame (pitch > 0 is nose up)"""
    x, z, pitch = chassis_pose
    c, s = math.cos(pitch), math.sin(pitch)
    return (x + c * point[0] - s * point[1], z + s * point[0] + c * point[1])


def wheel_positions(
    config: MechanismConfig, pose: MechanismPose, chassis_pose: ChassisPose
) -> Tuple[Point, Point, Point]:
    """World-frame centres of the (front, middle, rear) wheels"""
    return tuple(to_world(p, chassis_pose) for p in pose.wheels)  # type: ignore[return-value]


def passive_spring_torque(rate: float, rest_angle: float, angle: float) -> float:
    """Restoring torque of a linear torsion spring, -rate * (angle - rest_angle)"""
    if rate < 0.0:
        raise ValueError(f"spring rate must be non-negative, got {rate}")
    return -rate * (angle - rest_angle)
