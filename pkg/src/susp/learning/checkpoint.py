"""
Checkpoint Module

Binary agent snapshots. Layout:

    b"SUSPCKPT"                  magic
    uint32 LE                    format version
    uint32 LE                    header length in bytes
    header                       UTF-8 JSON: algo, layer sizes, array table, agent structure
    float64 LE                   every parameter and optimizer array, in table order

Optimizer moments and step counters are stored alongside the parameters so a
loaded agent resumes training exactly where it stopped.
"""

import json
import struct
import logging
from dataclasses import fields, is_dataclass
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np

from susp.errors import BadCheckpoint
from susp.learning.approx import MlpParams, OptimizerState
from susp.learning.baselines import DeterministicAgent
from susp.learning.sac import SacAgent
from susp.utils import atomic_write

logger = logging.getLogger(__name__)

MAGIC = b"SUSPCKPT"
FORMAT_VERSION = 1
_PREFIX = struct.Struct("<II")

Agent = Union[SacAgent, DeterministicAgent]


class _Encoder:
    def __init__(self):
        self.arrays: List[Tuple[str, np.ndarray]] = []

    def _array(self, name: str, array: np.ndarray) -> str:
        self.arrays.append((name, np.asarray(array, dtype="<f8")))
        return name

    def encode(self, name: str, value: Any) -> Dict[str, Any]:
        if isinstance(value, MlpParams):
            return {
                "type": "mlp",
                "sizes": value.sizes,
                "arrays": [self._array(f"{name}.{i}", a) for i, a in enumerate(value.arrays())],
            }
        if isinstance(value, OptimizerState):
            return {
                "type": "adam",
                "step": value.step,
                "lr": value.lr,
                "beta1": value.beta1,
                "beta2": value.beta2,
                "eps": value.eps,
                "m": [self._array(f"{name}.m{i}", a) for i, a in enumerate(value.m)],
                "v": [self._array(f"{name}.v{i}", a) for i, a in enumerate(value.v)],
            }
        if isinstance(value, tuple):
            return {
                "type": "tuple",
                "items": [self.encode(f"{name}.{i}", v) for i, v in enumerate(value)],
            }
        if isinstance(value, (bool, int, float, str)):
            return {"type": "scalar", "value": value}
        raise TypeError(f"cannot checkpoint field {name} of type {type(value).__name__}")


def _decode(node: Dict[str, Any], arrays: Dict[str, np.ndarray]) -> Any:
    kind = node.get("type")
    if kind == "mlp":
        params = MlpParams.from_arrays([arrays[n] for n in node["arrays"]])
        if params.sizes != list(node["sizes"]):
            raise BadCheckpoint(f"layer sizes {params.sizes} disagree with header {node['sizes']}")
        for w, b in zip(params.weights, params.biases):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise BadCheckpoint("weight and bias shapes are inconsistent")
        for w, nxt in zip(params.weights[:-1], params.weights[1:]):
            if w.shape[1] != nxt.shape[0]:
                raise BadCheckpoint("consecutive layer dimensions do not match")
        return params
    if kind == "adam":
        return OptimizerState(
            m=tuple(arrays[n] for n in node["m"]),
            v=tuple(arrays[n] for n in node["v"]),
            step=int(node["step"]),
            lr=float(node["lr"]),
            beta1=float(node["beta1"]),
            beta2=float(node["beta2"]),
            eps=float(node["eps"]),
        )
    if kind == "tuple":
        return tuple(_decode(s, arrays) for s in node["items"])
    if kind == "scalar":
        return node["value"]
    raise BadCheckpoint(f"unknown entry type {kind!r}")


def algo_of(agent: Agent) -> str:
    return "sac" if isinstance(agent, SacAgent) else agent.kind


def encode_checkpoint(agent: Agent, meta: Optional[Dict[str, Any]] = None) -> bytes:
    if not is_dataclass(agent):
        raise TypeError("agent must be a dataclass instance")
    encoder = _Encoder()
    structure = {f.name: encoder.encode(f.name, getattr(agent, f.name)) for f in fields(agent)}
    header = {
        "algo": algo_of(agent),
        "obs_dim": agent.obs_dim,
        "act_dim": agent.act_dim,
        "agent": structure,
        "arrays": [{"name": n, "shape": list(a.shape)} for n, a in encoder.arrays],
        "meta": meta or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blob = b"".join(a.tobytes() for _, a in encoder.arrays)
    return MAGIC + _PREFIX.pack(FORMAT_VERSION, len(header_bytes)) + header_bytes + blob


def decode_checkpoint(data: bytes) -> Tuple[Agent, Dict[str, Any]]:
    """
    Rebuild an agent from checkpoint bytes.

    Returns:
        (agent, header dict)

    Raises:
        BadCheckpoint: wrong magic, unsupported version, truncated data or shape mismatch
    """
    if data[: len(MAGIC)] != MAGIC:
        raise BadCheckpoint("not a susp checkpoint (bad magic)")
    offset = len(MAGIC)
    if len(data) < offset + _PREFIX.size:
        raise BadCheckpoint("truncated checkpoint prefix")
    version, header_len = _PREFIX.unpack_from(data, offset)
    if version != FORMAT_VERSION:
        raise BadCheckpoint(f"checkpoint format version {version}, expected {FORMAT_VERSION}")
    offset += _PREFIX.size
    try:
        header = json.loads(data[offset : offset + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise BadCheckpoint(f"unreadable checkpoint header: {e}") from e
    offset += header_len

    arrays: Dict[str, np.ndarray] = {}
    try:
        for entry in header["arrays"]:
            shape = tuple(int(s) for s in entry["shape"])
            count = int(np.prod(shape, dtype=np.int64))
            end = offset + 8 * count
            if end > len(data):
                raise BadCheckpoint(f"array {entry['name']} runs past the end of the file")
            arrays[entry["name"]] = (
                np.frombuffer(data[offset:end], dtype="<f8").astype(float).reshape(shape)
            )
            offset = end
        if offset != len(data):
            raise BadCheckpoint(f"{len(data) - offset} trailing bytes after the last array")

        values = {name: _decode(node, arrays) for name, node in header["agent"].items()}
        algo = header["algo"]
        agent: Agent = SacAgent(**values) if algo == "sac" else DeterministicAgent(**values)
    except BadCheckpoint:
        raise
    except (KeyError, TypeError, ValueError) as e:
        raise BadCheckpoint(f"malformed checkpoint: {e}") from e
    if agent.obs_dim != header["obs_dim"] or agent.act_dim != header["act_dim"]:
        raise BadCheckpoint("network shapes disagree with the recorded dimensions")
    return agent, header


def save_checkpoint(path: str, agent: Agent, meta: Optional[Dict[str, Any]] = None):
    atomic_write(path, encode_checkpoint(agent, meta))
    logger.info(f"checkpoint written to {path}")


def load_checkpoint(
    path: str, obs_dim: Optional[int] = None, act_dim: Optional[int] = None
) -> Tuple[Agent, Dict[str, Any]]:
    """Read a checkpoint, optionally checking it fits the given observation/action sizes"""
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise BadCheckpoint(f"cannot read checkpoint {path}: {e}") from e
    agent, header = decode_checkpoint(data)
    if (obs_dim is not None and agent.obs_dim != obs_dim) or (
        act_dim is not None and agent.act_dim != act_dim
    ):
        raise BadCheckpoint(
            f"checkpoint networks take {agent.obs_dim} observations / {agent.act_dim} actions, "
            f"environment has {obs_dim} / {act_dim}"
        )
    logger.info(f"loaded {header['algo']} checkpoint from {path}")
    return agent, header
