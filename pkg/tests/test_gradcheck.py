import numpy as np
import pytest

from susp.harness import gradcheck
from susp.harness.gradcheck import (
    NETWORK_TOL,
    CheckResult,
    check_temperature,
    numeric_gradient,
    relative_error,
    run_gradcheck,
)


def test_all_checks_pass():
    results = run_gradcheck(seed=0)
    assert {r.name for r in results} == {
        "mlp_backprop",
        "critic_loss",
        "policy_objective",
        "deterministic_actor",
        "temperature",
    }
    for r in results:
        assert r.passed, f"{r.name}: {r.max_rel_error:.3e}"


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_passes_for_other_seeds(seed):
    assert all(r.passed for r in run_gradcheck(seed=seed))


def test_corrupted_gradient_is_caught():
    results = {r.name: r for r in run_gradcheck(seed=0, perturb=True)}
    assert not results["mlp_backprop"].passed
    assert results["critic_loss"].passed


def test_relative_error_floor():
    assert relative_error([np.array([0.0])], [np.array([1e-9])]) == pytest.approx(1e-5)
    assert relative_error([np.array([2.0])], [np.array([1.0])]) == pytest.approx(0.5)


def test_numeric_gradient_restores_inputs():
    x = np.array([1.0, -2.0])
    grads = numeric_gradient(lambda: float(np.sum(x**2)), [x])
    assert np.array_equal(x, [1.0, -2.0])
    assert grads[0] == pytest.approx([2.0, -4.0], abs=1e-8)


def test_temperature_check():
    assert check_temperature(np.random.default_rng(0)).passed


def test_result_threshold():
    assert CheckResult("x", NETWORK_TOL / 2, NETWORK_TOL).passed
    assert not CheckResult("x", NETWORK_TOL, NETWORK_TOL).passed


@pytest.mark.parametrize(
    "check", ["check_critic_loss", "check_policy_objective", "check_deterministic_actor"]
)
def test_kinked_fixtures_are_refused(check, monkeypatch):
    monkeypatch.setattr(gradcheck, "KINK_MARGIN", 1e9)
    monkeypatch.setattr(gradcheck, "MAX_DRAWS", 5)
    with pytest.raises(RuntimeError, match="kink-free"):
        getattr(gradcheck, check)(np.random.default_rng(0))
