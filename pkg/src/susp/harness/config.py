"""
Run Configuration

Everything a run needs, as one frozen pydantic model. Config files are JSON
objects keyed by dotted paths ("pid.kp", "env.disturbance.enabled"); nested
objects are accepted too. Precedence: model defaults < config file < CLI flags.
"""

import os
import json
import logging
from typing import Any, Dict, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from susp.errors import ConfigError
from susp.learning.config import ALGORITHMS, RlConfig
from susp.sim.control import PidGains
from susp.sim.env import EpisodeConfig
from susp.sim.mechanism import MechanismConfig
from susp.sim.physics import BodyParams
from susp.utils import atomic_write

# Try to load environment variables from .env file
try:
    from dotenv import load_dotenv

    load_dotenv()
except ImportError:
    pass

logger = logging.getLogger(__name__)

CONFIG_ENV_VAR = "SUSP_CONFIG_PATH"
RESOLVED_NAME = "config.resolved"


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    algo: str = "sac"
    suspension: Literal["active", "passive"] = "active"
    steps: int = Field(100_000, gt=0)
    seed: int = Field(0, ge=0)
    out: str = "runs/default"
    episodes: int = Field(20, ge=1)
    height: float = Field(0.32, ge=0)
    mechanism: MechanismConfig = MechanismConfig()
    physics: BodyParams = BodyParams()
    pid: PidGains = PidGains()
    env: EpisodeConfig = EpisodeConfig()
    rl: RlConfig = RlConfig()

    @field_validator("algo")
    @classmethod
    def _known_algo(cls, value: str) -> str:
        if value not in ALGORITHMS:
            raise ValueError(f"unsupported algorithm '{value}'")
        return value


def flatten(values: Mapping[str, Any], prefix: str = "") -> Dict[str, Any]:
    """Nested dict -> {dotted.key: leaf}; lists and scalars are leaves"""
    flat: Dict[str, Any] = {}
    for key, value in values.items():
        path = f"{prefix}{key}"
        if isinstance(value, Mapping):
            flat.update(flatten(value, path + "."))
        else:
            flat[path] = value
    return flat


def unflatten(flat: Mapping[str, Any]) -> Dict[str, Any]:
    nested: Dict[str, Any] = {}
    for key in sorted(flat):
        node = nested
        parts = key.split(".")
        for part in parts[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"config key '{key}' conflicts with a scalar at '{part}'")
            node = child
        if isinstance(node.get(parts[-1]), dict):
            raise ConfigError(f"config key '{key}' names a section, not a value")
        node[parts[-1]] = flat[key]
    return nested


def flatten_config(config: RunConfig) -> Dict[str, Any]:
    return flatten(config.model_dump(mode="json"))


def default_config_path() -> Optional[str]:
    """Config file named by $SUSP_CONFIG_PATH (or .env), if any"""
    return os.getenv(CONFIG_ENV_VAR) or None


def load_config_file(config_path: str) -> Dict[str, Any]:
    """Read a JSON config file into a flat {dotted.key: value} dict"""
    try:
        with open(config_path, "r", encoding="utf-8") as f:
            values = json.load(f)
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {config_path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"error parsing {config_path}: {e}") from e
    if not isinstance(values, dict):
        raise ConfigError(f"{config_path} must contain a JSON object")
    logger.debug(f"loaded {len(values)} config entries from {config_path}")
    return flatten(values)


def _describe(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"]) or "config"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def resolve_config(
    file_values: Optional[Mapping[str, Any]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Merge config-file values and CLI overrides over the defaults.

    Args:
        file_values: Flat or nested values from a config file
        overrides: Flat values from command-line flags; None entries are ignored

    Raises:
        ConfigError: unknown key or invalid value
    """
    merged = flatten(file_values or {})
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    try:
        return RunConfig.model_validate(unflatten(merged))
    except ValidationError as e:
        raise ConfigError(_describe(e)) from e


def save_resolved(config: RunConfig, directory: str) -> str:
    """Write config.resolved (flattened, key-sorted JSON) into directory"""
    path = os.path.join(directory, RESOLVED_NAME)
    atomic_write(path, json.dumps(flatten_config(config), indent=2, sort_keys=True) + "\n")
    return path


def load_resolved(path: str) -> RunConfig:
    return resolve_config(load_config_file(path))
