import numpy as np
import pytest

from conftest import ToyEnv
from susp.harness.output_handler import write_metrics_csv
from susp.learning.trainer import (
    METRICS_COLUMNS,
    SeedStreams,
    Trainer,
    make_agent,
    train,
)
from susp.sim.env import SuspensionEnv


def _run(algo, config, steps, seed=7):
    agent = make_agent(algo, 4, 4, config, SeedStreams.from_seed(seed).init)
    return train(agent, ToyEnv(), steps, seed, config)


def test_warmup_only_fills_the_pool(tiny_rl):
    agent = make_agent("sac", 4, 4, tiny_rl, np.random.default_rng(0))
    trainer = Trainer(agent, ToyEnv(), tiny_rl, seed=0)
    metrics = trainer.run(8)
    assert metrics.gradient_steps == 0
    assert len(trainer.pool) == 8
    assert trainer.agent is agent


def test_one_update_per_step_after_warmup(tiny_rl):
    _, metrics = _run("sac", tiny_rl, 40)
    assert metrics.gradient_steps == 30
    assert [row.step for row in metrics.rows] == [10, 20, 30, 40]


def test_gradient_steps_setting(tiny_rl):
    config = tiny_rl.model_copy(update={"gradient_steps": 3})
    _, metrics = _run("td3", config, 20)
    assert metrics.gradient_steps == 30


def test_episodes_are_recorded(tiny_rl):
    _, metrics = _run("ddpg", tiny_rl, 60)
    assert metrics.episodes
    assert all(e.total_reward in (100.0, -50.0) for e in metrics.episodes)
    assert metrics.episodes[-1].end_step <= 60
    assert sum(e.length for e in metrics.episodes) <= 60


@pytest.mark.parametrize("algo", ["sac", "ddpg", "td3"])
def test_same_seed_same_metrics_file(algo, tiny_rl, tmp_path):
    paths = []
    for name in ("a.csv", "b.csv"):
        _, metrics = _run(algo, tiny_rl, 30, seed=11)
        paths.append(tmp_path / name)
        write_metrics_csv(str(paths[-1]), metrics)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_different_seeds_differ(tiny_rl):
    _, a = _run("sac", tiny_rl, 30, seed=1)
    _, b = _run("sac", tiny_rl, 30, seed=2)
    assert [r.values() for r in a.rows] != [r.values() for r in b.rows]


def test_entropy_coefficient_column(tiny_rl):
    _, sac = _run("sac", tiny_rl, 20)
    _, td3 = _run("td3", tiny_rl, 20)
    assert all(row.ent_coef > 0.0 for row in sac.rows)
    assert all(row.ent_coef == 0.0 for row in td3.rows)
    assert METRICS_COLUMNS[-1] == "ent_coef"


def test_unsupported_algorithm(tiny_rl):
    with pytest.raises(ValueError, match="unsupported algorithm"):
        make_agent("ppo", 4, 4, tiny_rl, np.random.default_rng(0))


def test_steps_must_be_positive(tiny_rl):
    agent = make_agent("sac", 4, 4, tiny_rl, np.random.default_rng(0))
    with pytest.raises(ValueError):
        Trainer(agent, ToyEnv(), tiny_rl, seed=0).run(0)


def test_seed_streams_are_reproducible():
    a = SeedStreams.from_seed(5)
    b = SeedStreams.from_seed(5)
    assert a.actions.random() == b.actions.random()
    assert a.updates.random() != SeedStreams.from_seed(5).episodes.random()


@pytest.mark.slow
def test_short_run_on_the_rover(tiny_rl, quick_episode):
    env = SuspensionEnv(episode=quick_episode)
    agent = make_agent("sac", env.observation_size, env.action_size, tiny_rl, np.random.default_rng(0))
    agent, metrics = train(agent, env, 60, seed=0, config=tiny_rl)
    assert metrics.gradient_steps == 50
    assert len(metrics.rows) == 6
    assert all(np.isfinite(row.critic_loss) for row in metrics.rows)
