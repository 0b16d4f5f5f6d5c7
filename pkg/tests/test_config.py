import json
from pathlib import Path

import pytest

from susp.errors import ConfigError
from susp.harness.config import (
    CONFIG_ENV_VAR,
    RunConfig,
    default_config_path,
    flatten,
    flatten_config,
    load_config_file,
    load_resolved,
    resolve_config,
    save_resolved,
    unflatten,
)


def test_defaults():
    config = resolve_config()
    assert config == RunConfig()
    assert config.algo == "sac"
    assert config.env.height_range == (0.25, 0.32)
    assert config.rl.network.hidden_sizes == (64, 64)


def test_flatten_and_unflatten():
    nested = {"pid": {"kp": 10.0}, "env": {"disturbance": {"enabled": True}}, "seed": 3}
    flat = flatten(nested)
    assert flat == {"pid.kp": 10.0, "env.disturbance.enabled": True, "seed": 3}
    assert unflatten(flat) == nested


def test_conflicting_keys():
    with pytest.raises(ConfigError):
        unflatten({"pid": 3, "pid.kp": 1.0})


def test_precedence(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"seed": 4, "pid.kp": 12.5, "rl": {"gamma": 0.95}, "steps": 500}))
    config = resolve_config(load_config_file(str(path)), {"seed": 9, "steps": None})
    assert config.seed == 9
    assert config.steps == 500
    assert config.pid.kp == 12.5
    assert config.rl.gamma == 0.95


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="kpp"):
        resolve_config({"pid.kpp": 1.0})


def test_invalid_value_rejected():
    with pytest.raises(ConfigError, match="gamma"):
        resolve_config({"rl.gamma": 1.5})


def test_unsupported_algorithm():
    with pytest.raises(ConfigError, match="unsupported algorithm"):
        resolve_config(overrides={"algo": "ppo"})


def test_fixed_constants_cannot_be_overridden():
    with pytest.raises(ConfigError):
        resolve_config({"env.max_agent_steps": 1000})
    with pytest.raises(ConfigError):
        resolve_config({"mechanism.joint_limit": 1.0})


def test_missing_and_malformed_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config_file(str(bad))
    listing = tmp_path / "list.json"
    listing.write_text("[1, 2]")
    with pytest.raises(ConfigError):
        load_config_file(str(listing))


def test_resolved_round_trip(tmp_path):
    config = resolve_config({"algo": "td3", "env.disturbance.enabled": True, "seed": 2})
    path = save_resolved(config, str(tmp_path))
    assert load_resolved(path) == config
    data = json.loads(open(path, encoding="utf-8").read())
    assert list(data) == sorted(data)
    assert data == flatten_config(config)


def test_config_path_from_environment(monkeypatch):
    monkeypatch.setenv(CONFIG_ENV_VAR, "/tmp/susp.json")
    assert default_config_path() == "/tmp/susp.json"
    monkeypatch.delenv(CONFIG_ENV_VAR)
    assert default_config_path() is None


def test_example_config_lists_the_defaults():
    path = Path(__file__).resolve().parent.parent / "config" / "config.example.json"
    values = load_config_file(str(path))
    assert resolve_config(values) == RunConfig()
    fixed = {"mechanism.joint_limit", "env.max_agent_steps", "env.pitch_fail", "env.yaw_fail"}
    assert set(values) == set(flatten_config(RunConfig())) - fixed
