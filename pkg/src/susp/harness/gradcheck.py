"""
Gradient Check

Compares every hand-written gradient in the learning code against central
finite differences on small random fixtures. Inputs are redrawn until no
ReLU pre-activation and no twin-critic minimum sits within KINK_MARGIN of a
kink, so the finite differences never straddle a non-differentiable point.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List

import numpy as np

from susp.learning.approx import MlpParams, forward, forward_with_cache, gradient, init_mlp
from susp.learning.baselines import actor_objective
from susp.learning.sac import (
    LOG_STD_MAX,
    LOG_STD_MIN,
    critic_loss,
    policy_heads,
    policy_objective,
    q_values,
    temperature_objective,
)

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
REL_FLOOR = 1e-4
KINK_MARGIN = 1e-3
NETWORK_TOL = 1e-4
TEMPERATURE_TOL = 1e-6
MAX_DRAWS = 200


@dataclass(frozen=True)
class CheckResult:
    name: str
    max_rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error < self.tolerance


def relative_error(analytic: List[np.ndarray], numeric: List[np.ndarray]) -> float:
    """Largest elementwise |a - n| / max(|a|, |n|, REL_FLOOR)"""
    worst = 0.0
    for a, n in zip(analytic, numeric):
        scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), REL_FLOOR)
        worst = max(worst, float(np.max(np.abs(a - n) / scale)))
    return worst


def numeric_gradient(value: Callable[[], float], arrays: List[np.ndarray]) -> List[np.ndarray]:
    """Central differences of value() w.r.t. every entry of arrays (perturbed in place)"""
    grads = []
    for array in arrays:
        grad = np.zeros_like(array)
        for idx in np.ndindex(array.shape):
            original = array[idx]
            array[idx] = original + FD_STEP
            plus = value()
            array[idx] = original - FD_STEP
            minus = value()
            array[idx] = original
            grad[idx] = (plus - minus) / (2.0 * FD_STEP)
        grads.append(grad)
    return grads


def _kink_free(params: MlpParams, inputs: np.ndarray) -> bool:
    _, cache = forward_with_cache(params, inputs)
    return all(np.min(np.abs(z)) >= KINK_MARGIN for z in cache.pre_activations[:-1])


def _draw_fixture(name: str, draw: Callable[[], tuple], accept: Callable[..., bool]) -> tuple:
    """Redraw until accept(*fixture) holds; a check never runs on a kinked fixture"""
    for _ in range(MAX_DRAWS):
        fixture = draw()
        if accept(*fixture):
            return fixture
    logger.warning(f"gradcheck {name}: every fixture in {MAX_DRAWS} draws sits near a kink")
    raise RuntimeError(f"{name}: no kink-free fixture in {MAX_DRAWS} draws")


def check_mlp_backprop(rng: np.random.Generator, perturb: bool = False, trials: int = 20) -> CheckResult:
    worst = 0.0
    for trial in range(trials):
        hidden = [int(rng.integers(2, 9)) for _ in range(int(rng.integers(1, 4)))]
        sizes = [int(rng.integers(1, 6)), *hidden, int(rng.integers(1, 4))]
        params = init_mlp(sizes, rng)
        (x,) = _draw_fixture(
            "mlp_backprop",
            lambda: (rng.standard_normal((3, sizes[0])),),
            lambda x: _kink_free(params, x),
        )
        direction = rng.standard_normal((3, sizes[-1]))
        _, grads = gradient(params, x, lambda out: (float(np.sum(direction * out)), direction))
        analytic = [g.copy() for g in grads.arrays()]
        if perturb and trial == 0:
            analytic[0].flat[0] += 1.0
        numeric = numeric_gradient(
            lambda: float(np.sum(direction * forward(params, x))), params.arrays()
        )
        worst = max(worst, relative_error(analytic, numeric))
    return CheckResult("mlp_backprop", worst, NETWORK_TOL)


def check_critic_loss(rng: np.random.Generator) -> CheckResult:
    critic = init_mlp([8, 8, 8, 1], rng)
    obs, act = _draw_fixture(
        "critic_loss",
        lambda: (rng.standard_normal((5, 4)), rng.uniform(-1.0, 1.0, size=(5, 4))),
        lambda obs, act: _kink_free(critic, np.concatenate([obs, act], axis=1)),
    )
    targets = rng.standard_normal(5)
    _, grads = critic_loss(critic, obs, act, targets)
    numeric = numeric_gradient(
        lambda: critic_loss(critic, obs, act, targets)[0], critic.arrays()
    )
    return CheckResult("critic_loss", relative_error(grads.arrays(), numeric), NETWORK_TOL)


def _actor_fixture_ok(policy, critic1, critic2, obs, noise) -> bool:
    if not _kink_free(policy, obs):
        return False
    mean, log_std, raw, _ = policy_heads(policy, obs)
    if np.any(raw < LOG_STD_MIN + KINK_MARGIN) or np.any(raw > LOG_STD_MAX - KINK_MARGIN):
        return False
    action = np.tanh(mean + np.exp(log_std) * noise)
    inputs = np.concatenate([obs, action], axis=1)
    if not (_kink_free(critic1, inputs) and _kink_free(critic2, inputs)):
        return False
    gap = np.abs(q_values(critic1, obs, action) - q_values(critic2, obs, action))
    return bool(np.min(gap) >= KINK_MARGIN)


def check_policy_objective(rng: np.random.Generator) -> CheckResult:
    policy = init_mlp([3, 6, 4], rng)
    critic1 = init_mlp([5, 6, 1], rng)
    critic2 = init_mlp([5, 6, 1], rng)
    alpha = 0.3
    obs, noise = _draw_fixture(
        "policy_objective",
        lambda: (rng.standard_normal((4, 3)), rng.standard_normal((4, 2))),
        lambda obs, noise: _actor_fixture_ok(policy, critic1, critic2, obs, noise),
    )
    _, grads = policy_objective(policy, critic1, critic2, alpha, obs, noise)
    numeric = numeric_gradient(
        lambda: policy_objective(policy, critic1, critic2, alpha, obs, noise)[0],
        policy.arrays(),
    )
    return CheckResult("policy_objective", relative_error(grads.arrays(), numeric), NETWORK_TOL)


def check_deterministic_actor(rng: np.random.Generator) -> CheckResult:
    actor = init_mlp([3, 6, 2], rng)
    critic = init_mlp([5, 6, 1], rng)
    (obs,) = _draw_fixture(
        "deterministic_actor",
        lambda: (rng.standard_normal((4, 3)),),
        lambda obs: _kink_free(actor, obs)
        and _kink_free(critic, np.concatenate([obs, np.tanh(forward(actor, obs))], axis=1)),
    )
    _, grads = actor_objective(actor, critic, obs)
    numeric = numeric_gradient(lambda: actor_objective(actor, critic, obs)[0], actor.arrays())
    return CheckResult("deterministic_actor", relative_error(grads.arrays(), numeric), NETWORK_TOL)


def check_temperature(rng: np.random.Generator) -> CheckResult:
    log_alpha = float(rng.uniform(-1.0, 1.0))
    log_probs = rng.standard_normal(16)
    target_entropy = -2.0
    _, analytic = temperature_objective(log_alpha, log_probs, target_entropy)
    plus, _ = temperature_objective(log_alpha + FD_STEP, log_probs, target_entropy)
    minus, _ = temperature_objective(log_alpha - FD_STEP, log_probs, target_entropy)
    numeric = (plus - minus) / (2.0 * FD_STEP)
    error = abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_FLOOR)
    return CheckResult("temperature", error, TEMPERATURE_TOL)


def run_gradcheck(seed: int = 0, perturb: bool = False) -> List[CheckResult]:
    """
    Run every gradient check.

    Args:
        seed: Fixture seed
        perturb: Corrupt one analytic gradient so the suite must report a failure
    """
    rng = np.random.default_rng(seed)
    results = [
        check_mlp_backprop(rng, perturb=perturb),
        check_critic_loss(rng),
        check_policy_objective(rng),
        check_deterministic_actor(rng),
        check_temperature(rng),
    ]
    for r in results:
        logger.info(f"gradcheck {r.name}: max_rel_err={r.max_rel_error:.3e} passed={r.passed}")
    return results
