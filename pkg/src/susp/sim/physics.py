"""
Planar Physics Module

Sagittal-plane rigid-body dynamics of the rover: chassis plus the five-bar
suspension, driven over a single step obstacle with penalty wheel contact.

Generalized coordinates are (chassis_x, chassis_z, chassis_pitch, q3, q4).
The mass matrix is constant: all mass translates with the chassis origin and
each control-link assembly adds a rotational inertia coupled to pitch.
Velocities are advanced by a linearly implicit Euler step solved with damped
Newton iterations; positions follow with the new velocities.
"""

import math
import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import List, NamedTuple, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from susp.errors import NumericalBlowup, OutOfWorld, Unreachable
from susp.sim.mechanism import MechanismConfig, Point, _close_loop, passive_spring_torque, to_world

logger = logging.getLogger(__name__)

MODES = ("active", "passive")

_NEWTON_MAX_ITER = 25
_NEWTON_TOL = 1e-9
_BACKTRACK_MIN = 1.0 / 64.0


class TerrainProfile(BaseModel):
    """Flat ground with one vertical step of height step_height at step_x"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    step_x: float = Field(gt=0)
    step_height: float = Field(ge=0)
    extent: float = Field(gt=0)

    @model_validator(mode="after")
    def _step_inside(self) -> "TerrainProfile":
        if self.step_x >= self.extent:
            raise ValueError("step_x must lie inside the world extent")
        return self


class BodyParams(BaseModel):
    """Inertial, contact and integrator parameters (SI units)"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    chassis_mass: float = Field(15.0, gt=0)
    chassis_inertia: float = Field(0.6, gt=0)
    link_mass_1: float = Field(0.6, gt=0)
    link_mass_2: float = Field(0.6, gt=0)
    link_mass_3: float = Field(0.4, gt=0)
    link_mass_4: float = Field(0.4, gt=0)
    wheel_mass: float = Field(1.0, gt=0)
    contact_stiffness: float = Field(5e4, gt=0)
    contact_damping: float = Field(1e3, gt=0)
    friction_coeff: float = Field(0.9, ge=0, le=2)
    slip_velocity: float = Field(0.05, gt=0)
    drive_speed: float = Field(0.7, ge=0)
    joint_damping: float = Field(0.5, gt=0)
    gravity: float = Field(9.81, gt=0)
    dt: float = Field(1e-3, gt=0)
    jacobian_step: float = Field(1e-6, gt=0)

    @property
    def total_mass(self) -> float:
        return (
            self.chassis_mass
            + self.link_mass_1
            + self.link_mass_2
            + self.link_mass_3
            + self.link_mass_4
            + 3.0 * self.wheel_mass
        )


@dataclass(frozen=True)
class RoverState:
    """Full simulation state; roll and yaw are kinematic channels, not integrated"""

    chassis_x: float
    chassis_z: float
    chassis_pitch: float
    vel_x: float
    vel_z: float
    pitch_rate: float
    q3: float
    q4: float
    q3_rate: float
    q4_rate: float
    roll: float = 0.0
    yaw: float = 0.0
    wheel_contact: Tuple[bool, bool, bool] = (False, False, False)
    sim_time: float = 0.0

    def coords(self) -> np.ndarray:
        return np.array(
            [self.chassis_x, self.chassis_z, self.chassis_pitch, self.q3, self.q4]
        )

    def rates(self) -> np.ndarray:
        return np.array([self.vel_x, self.vel_z, self.pitch_rate, self.q3_rate, self.q4_rate])


class ContactResult(NamedTuple):
    force: Point
    in_contact: bool


def terrain_height(profile: TerrainProfile, x: float) -> float:
    """Ground height at x: 0 before the step face, step_height at and after it"""
    if x < 0.0 or x > profile.extent:
        raise OutOfWorld(f"x={x:.4f} outside world [0, {profile.extent}]")
    return profile.step_height if x >= profile.step_x else 0.0


def _terrain_features(profile: TerrainProfile, x: float, z: float) -> List[Tuple[float, float, float]]:
    """(distance, normal_x, normal_z) of each terrain feature a wheel centre can touch"""
    sx, h = profile.step_x, profile.step_height
    features = []
    if x <= sx:
        features.append((z, 0.0, 1.0))
    if x >= sx:
        features.append((z - h, 0.0, 1.0))
    if x < sx:
        if z <= h:
            if z >= 0.0:
                features.append((sx - x, -1.0, 0.0))
        else:
            # convex top corner as a point
            ex, ez = x - sx, z - h
            dist = math.hypot(ex, ez)
            features.append((dist, ex / dist, ez / dist))
    return features


def _contact_terms(
    cx: float,
    cz: float,
    vx: float,
    vz: float,
    radius: float,
    profile: TerrainProfile,
    params: BodyParams,
    surface_speed: float,
) -> Tuple[float, float, np.ndarray, np.ndarray, bool]:
    """Summed penalty force on one wheel plus its 2x2 derivatives w.r.t. position and velocity"""
    k, c = params.contact_stiffness, params.contact_damping
    mu, v0 = params.friction_coeff, params.slip_velocity
    fx = fz = 0.0
    dfdp = np.zeros((2, 2))
    dfdv = np.zeros((2, 2))
    touching = False
    for dist, nx, nz in _terrain_features(profile, cx, cz):
        delta = radius - dist
        if delta <= 0.0:
            continue
        touching = True
        fn = k * delta - c * (nx * vx + nz * vz)
        if fn <= 0.0:
            continue
        tx, tz = nz, -nx
        ratio = (tx * vx + tz * vz - surface_speed) / v0
        if ratio > 1.0:
            sat, dsat = 1.0, 0.0
        elif ratio < -1.0:
            sat, dsat = -1.0, 0.0
        else:
            sat, dsat = ratio, 1.0 / v0
        ft = -mu * fn * sat
        fx += fn * nx + ft * tx
        fz += fn * nz + ft * tz
        n = np.array([nx, nz])
        t = np.array([tx, tz])
        lever = n - mu * sat * t
        dfdp -= k * np.outer(lever, n)
        dfdv -= c * np.outer(lever, n) + mu * fn * dsat * np.outer(t, t)
    return fx, fz, dfdp, dfdv, touching


def contact_force(
    wheel_center: Point,
    wheel_radius: float,
    profile: TerrainProfile,
    wheel_velocity: Point,
    params: BodyParams,
    surface_speed: float = 0.0,
) -> ContactResult:
    """
    Penalty contact force on a wheel from every terrain feature it penetrates.

    Args:
        wheel_center: World-frame wheel centre
        wheel_radius: Wheel radius (m)
        profile: Step terrain
        wheel_velocity: World-frame velocity of the wheel centre
        params: Contact stiffness, damping and friction
        surface_speed: Rim speed of the wheel (0 = braked)

    Returns:
        ContactResult(force, in_contact)
    """
    fx, fz, _, _, touching = _contact_terms(
        wheel_center[0],
        wheel_center[1],
        wheel_velocity[0],
        wheel_velocity[1],
        wheel_radius,
        profile,
        params,
        surface_speed,
    )
    return ContactResult((fx, fz), touching)


def _penetration_energy(
    center: Point, radius: float, profile: TerrainProfile, params: BodyParams
) -> float:
    energy = 0.0
    for dist, _, _ in _terrain_features(profile, center[0], center[1]):
        delta = radius - dist
        if delta > 0.0:
            energy += 0.5 * params.contact_stiffness * delta * delta
    return energy


@lru_cache(maxsize=32)
def _cached_mass_matrix(params: BodyParams, config: MechanismConfig) -> np.ndarray:
    bogie = params.link_mass_1 + params.link_mass_2 + 3.0 * params.wheel_mass

    def link_inertia(link_mass: float, length: float) -> float:
        return link_mass * length * length / 3.0 + 0.5 * bogie * length * length

    i3 = link_inertia(params.link_mass_3, config.len_link3)
    i4 = link_inertia(params.link_mass_4, config.len_link4)
    m = params.total_mass
    matrix = np.zeros((5, 5))
    matrix[0, 0] = matrix[1, 1] = m
    matrix[2:, 2:] = [
        [params.chassis_inertia + i3 + i4, i3, i4],
        [i3, i3, 0.0],
        [i4, 0.0, i4],
    ]
    matrix.setflags(write=False)
    return matrix


def mass_matrix(params: BodyParams, config: MechanismConfig) -> np.ndarray:
    """Constant 5x5 mass matrix over (x, z, pitch, q3, q4); read-only"""
    return _cached_mass_matrix(params, config)


def local_wheel_centres(config: MechanismConfig, q3: float, q4: float) -> Tuple[Point, Point, Point]:
    return _close_loop(config, q3, q4).wheels


def wheel_world_positions(config: MechanismConfig, coords: Sequence[float]) -> np.ndarray:
    """World-frame (front, middle, rear) wheel centres as a 3x2 array"""
    x, z, pitch, q3, q4 = (float(v) for v in coords)
    wheels = local_wheel_centres(config, q3, q4)
    return np.array([to_world(p, (x, z, pitch)) for p in wheels])


def wheel_jacobians(
    config: MechanismConfig, coords: Sequence[float], step: float = 1e-6
) -> np.ndarray:
    """
    Central finite-difference Jacobians of the wheel centres.

    Returns:
        Array of shape (3, 2, 5): d(wheel_i world point) / d(generalized coordinate)
    """
    base = np.asarray(coords, dtype=float)
    jac = np.zeros((3, 2, 5))
    for j in range(5):
        plus = base.copy()
        minus = base.copy()
        plus[j] += step
        minus[j] -= step
        diff = wheel_world_positions(config, plus) - wheel_world_positions(config, minus)
        jac[:, :, j] = diff / (2.0 * step)
    return jac


def _joint_stiffness(mode: str, config: MechanismConfig) -> Tuple[np.ndarray, np.ndarray]:
    stiffness = np.zeros(5)
    rest = np.zeros(5)
    if mode == "passive":
        stiffness[3] = config.spring_rate_rear
        stiffness[4] = config.spring_rate_front
        rest[3] = config.spring_rest_rear
        rest[4] = config.spring_rest_front
    return stiffness, rest


def joint_spring_torques(mode: str, config: MechanismConfig, coords: Sequence[float]) -> np.ndarray:
    """Generalized spring torques at coords; zero in active mode"""
    torques = np.zeros(5)
    if mode == "passive":
        torques[3] = passive_spring_torque(config.spring_rate_rear, config.spring_rest_rear, coords[3])
        torques[4] = passive_spring_torque(config.spring_rate_front, config.spring_rest_front, coords[4])
    return torques


def _check_mode(mode: str) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown suspension mode '{mode}', expected one of {MODES}")


def contact_flags(
    state: RoverState, profile: TerrainProfile, config: MechanismConfig
) -> Tuple[bool, bool, bool]:
    wheels = wheel_world_positions(config, state.coords())
    flags = []
    for cx, cz in wheels:
        flags.append(
            any(
                config.wheel_radius - dist > 0.0
                for dist, _, _ in _terrain_features(profile, float(cx), float(cz))
            )
        )
    return (flags[0], flags[1], flags[2])


def step_dynamics(
    state: RoverState,
    mode: str,
    joint_torques: Tuple[float, float],
    profile: TerrainProfile,
    params: BodyParams,
    config: MechanismConfig,
) -> RoverState:
    """
    Advance the rover by one integrator step.

    Args:
        state: Current state
        mode: "active" (joint_torques applied, no springs) or "passive" (springs only)
        joint_torques: (rear q3, front q4) actuator torques in N*m, ignored in passive mode
        profile: Terrain
        params: Body and integrator parameters
        config: Mechanism geometry

    Returns:
        The state one dt later

    Raises:
        NumericalBlowup: if any coordinate or rate becomes non-finite
    """
    _check_mode(mode)
    dt = params.dt
    q = state.coords()
    v = state.rates()
    mass = mass_matrix(params, config)
    stiffness, _ = _joint_stiffness(mode, config)
    damping = np.array([0.0, 0.0, 0.0, params.joint_damping, params.joint_damping])

    external = np.zeros(5)
    external[1] = -params.total_mass * params.gravity
    if mode == "active":
        external[3] = joint_torques[0]
        external[4] = joint_torques[1]

    radius = config.wheel_radius
    rim = params.drive_speed
    step = params.jacobian_step

    def residual(v_new: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        # contact at the end-of-step wheel positions, mapped through the midpoint Jacobian
        q_new = q + dt * v_new
        wheel_pos = wheel_world_positions(config, q_new).reshape(6)
        jac = wheel_jacobians(config, q + 0.5 * dt * v_new, step).reshape(6, 5)
        wheel_vel = jac @ v_new
        forces = np.zeros(6)
        dfdp = np.zeros((6, 6))
        dfdv = np.zeros((6, 6))
        for i in range(3):
            s = slice(2 * i, 2 * i + 2)
            fx, fz, dp, dv, _ = _contact_terms(
                wheel_pos[2 * i],
                wheel_pos[2 * i + 1],
                wheel_vel[2 * i],
                wheel_vel[2 * i + 1],
                radius,
                profile,
                params,
                rim,
            )
            forces[s] = (fx, fz)
            dfdp[s, s] = dp
            dfdv[s, s] = dv
        generalized = (
            external
            + jac.T @ forces
            + joint_spring_torques(mode, config, q_new)
            - damping * v_new
        )
        g = mass @ (v_new - v) - dt * generalized
        a = (
            mass
            + np.diag(dt * damping + dt * dt * stiffness)
            - dt * jac.T @ (dt * dfdp + dfdv) @ jac
        )
        return g, a

    v_new = v.copy()
    g, a = residual(v_new)
    norm = float(np.max(np.abs(g)))
    converged = norm <= _NEWTON_TOL
    for _ in range(_NEWTON_MAX_ITER):
        if converged:
            break
        try:
            delta = np.linalg.solve(a, -g)
        except np.linalg.LinAlgError as e:
            raise NumericalBlowup(f"singular implicit system at t={state.sim_time:.4f}") from e
        t = 1.0
        while True:
            trial = v_new + t * delta
            try:
                g_trial, a_trial = residual(trial)
                norm_trial = float(np.max(np.abs(g_trial)))
            except Unreachable:
                norm_trial = math.inf
            if norm_trial < norm:
                break
            if t <= _BACKTRACK_MIN:
                break
            t *= 0.5
        if not math.isfinite(norm_trial):
            break
        v_new, g, a, norm = trial, g_trial, a_trial, norm_trial
        converged = norm <= _NEWTON_TOL
    if not converged:
        logger.debug(f"implicit step at t={state.sim_time:.4f} stopped at residual {norm:.3e}")

    q_new = q + dt * v_new
    limit = config.joint_limit
    for j in (3, 4):
        if abs(q_new[j]) > limit:
            q_new[j] = math.copysign(limit, q_new[j])
            v_new[j] = 0.0

    if not (np.all(np.isfinite(q_new)) and np.all(np.isfinite(v_new))):
        raise NumericalBlowup(
            f"non-finite state at t={state.sim_time:.4f}; dt={dt} too large for the contact stiffness"
        )

    advanced = RoverState(
        chassis_x=float(q_new[0]),
        chassis_z=float(q_new[1]),
        chassis_pitch=float(q_new[2]),
        vel_x=float(v_new[0]),
        vel_z=float(v_new[1]),
        pitch_rate=float(v_new[2]),
        q3=float(q_new[3]),
        q4=float(q_new[4]),
        q3_rate=float(v_new[3]),
        q4_rate=float(v_new[4]),
        roll=state.roll,
        yaw=state.yaw,
        sim_time=state.sim_time + dt,
    )
    return replace(advanced, wheel_contact=contact_flags(advanced, profile, config))


def mechanical_energy(
    state: RoverState,
    mode: str,
    profile: TerrainProfile,
    params: BodyParams,
    config: MechanismConfig,
) -> float:
    """Kinetic + gravitational + joint-spring + contact-spring energy in joules"""
    _check_mode(mode)
    v = state.rates()
    q = state.coords()
    kinetic = 0.5 * float(v @ mass_matrix(params, config) @ v)
    gravitational = params.total_mass * params.gravity * state.chassis_z
    stiffness, rest = _joint_stiffness(mode, config)
    spring = 0.5 * float(np.sum(stiffness * (q - rest) ** 2))
    contact = sum(
        _penetration_energy((float(cx), float(cz)), config.wheel_radius, profile, params)
        for cx, cz in wheel_world_positions(config, q)
    )
    return kinetic + gravitational + spring + contact


def rest_state(
    config: MechanismConfig,
    params: BodyParams,
    profile: TerrainProfile,
    chassis_x: float,
) -> RoverState:
    """
    Rover at zero pitch and zero joint angles on the lower ground, at rest.

    The chassis height is chosen so the lowest wheel carries a third of the
    weight through the contact spring; the integrator settles the rest.
    """
    wheels = local_wheel_centres(config, 0.0, 0.0)
    for wx, _ in wheels:
        if terrain_height(profile, chassis_x + wx) != 0.0:
            raise OutOfWorld(f"rover at x={chassis_x:.3f} would start on the step")
    sag = params.total_mass * params.gravity / (3.0 * params.contact_stiffness)
    lowest = min(wz for _, wz in wheels)
    state = RoverState(
        chassis_x=chassis_x,
        chassis_z=config.wheel_radius - lowest - sag,
        chassis_pitch=0.0,
        vel_x=0.0,
        vel_z=0.0,
        pitch_rate=0.0,
        q3=0.0,
        q4=0.0,
        q3_rate=0.0,
        q4_rate=0.0,
    )
    return replace(state, wheel_contact=contact_flags(state, profile, config))


def distance_to_obstacle(
    state: RoverState, profile: TerrainProfile, config: MechanismConfig
) -> float:
    """step_x minus the leading edge (centre + radius) of the foremost wheel"""
    wheels = wheel_world_positions(config, state.coords())
    return profile.step_x - (float(np.max(wheels[:, 0])) + config.wheel_radius)
