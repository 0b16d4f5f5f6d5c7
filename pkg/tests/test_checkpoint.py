import os
import struct

import numpy as np
import pytest

from susp.errors import BadCheckpoint
from susp.learning.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    algo_of,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from susp.learning.replay import Batch
from susp.learning.trainer import evaluation_action, make_agent, update_agent


def _batch(rng):
    return Batch(
        observations=rng.standard_normal((8, 4)),
        actions=rng.uniform(-1, 1, size=(8, 4)),
        rewards=rng.standard_normal(8),
        next_observations=rng.standard_normal((8, 4)),
        dones=np.zeros(8),
    )


@pytest.mark.parametrize("algo", ["sac", "ddpg", "td3"])
def test_restored_agent_acts_identically(algo, tiny_rl, rng, tmp_path):
    agent = make_agent(algo, 4, 4, tiny_rl, rng)
    agent, _ = update_agent(agent, _batch(rng), rng)
    path = str(tmp_path / "agent.bin")
    save_checkpoint(path, agent, meta={"seed": 3})

    restored, header = load_checkpoint(path, obs_dim=4, act_dim=4)
    assert header["algo"] == algo == algo_of(restored)
    assert header["meta"] == {"seed": 3}
    obs = rng.standard_normal((10, 4))
    assert np.array_equal(evaluation_action(agent, obs), evaluation_action(restored, obs))


def test_training_resumes_exactly(tiny_rl, rng):
    agent = make_agent("sac", 4, 4, tiny_rl, rng)
    restored, _ = decode_checkpoint(encode_checkpoint(agent))
    batch = _batch(rng)
    a, _ = update_agent(agent, batch, np.random.default_rng(8))
    b, _ = update_agent(restored, batch, np.random.default_rng(8))
    assert a.log_alpha == b.log_alpha
    assert np.array_equal(a.policy.weights[0], b.policy.weights[0])
    assert a.critic1_opt.step == b.critic1_opt.step == 1


def test_encoding_is_deterministic(tiny_rl):
    a = encode_checkpoint(make_agent("td3", 4, 4, tiny_rl, np.random.default_rng(1)))
    b = encode_checkpoint(make_agent("td3", 4, 4, tiny_rl, np.random.default_rng(1)))
    assert a == b
    assert a.startswith(MAGIC)


class TestCorruption:
    @pytest.fixture
    def data(self, tiny_rl, rng):
        return encode_checkpoint(make_agent("sac", 4, 4, tiny_rl, rng))

    def test_bad_magic(self, data):
        with pytest.raises(BadCheckpoint):
            decode_checkpoint(b"NOTACKPT" + data[len(MAGIC):])

    def test_other_version(self, data):
        offset = len(MAGIC)
        header_len = struct.unpack_from("<I", data, offset + 4)[0]
        patched = data[:offset] + struct.pack("<II", FORMAT_VERSION + 1, header_len) + data[offset + 8:]
        with pytest.raises(BadCheckpoint):
            decode_checkpoint(patched)

    def test_truncated(self, data):
        with pytest.raises(BadCheckpoint):
            decode_checkpoint(data[:-8])

    def test_trailing_bytes(self, data):
        with pytest.raises(BadCheckpoint):
            decode_checkpoint(data + b"\x00" * 8)

    def test_garbled_header(self, data):
        offset = len(MAGIC) + 8
        with pytest.raises(BadCheckpoint):
            decode_checkpoint(data[:offset] + b"X" + data[offset + 1:])

    def test_wrong_environment_size(self, data, tmp_path):
        path = tmp_path / "agent.bin"
        path.write_bytes(data)
        with pytest.raises(BadCheckpoint):
            load_checkpoint(str(path), obs_dim=6, act_dim=4)

    def test_missing_file(self, tmp_path):
        with pytest.raises(BadCheckpoint):
            load_checkpoint(str(tmp_path / "nope.bin"))


def test_save_leaves_no_temp_files(tiny_rl, rng, tmp_path):
    save_checkpoint(str(tmp_path / "a.bin"), make_agent("ddpg", 4, 4, tiny_rl, rng))
    assert os.listdir(tmp_path) == ["a.bin"]
