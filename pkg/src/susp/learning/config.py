"""Hyperparameters shared by the SAC agent, the DDPG/TD3 baselines and the trainer."""

from typing import Optional

from pydantic import BaseModel, ConfigDict, Field

from susp.learning.approx import NetworkConfig

ALGORITHMS = ("sac", "ddpg", "td3")


class RlConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    gamma: float = Field(0.99, ge=0, le=1)
    tau: float = Field(0.005, ge=0, le=1)
    batch_size: int = Field(256, ge=1)
    replay_capacity: int = Field(100_000, ge=1)
    warmup_steps: int = Field(1000, ge=0)
    gradient_steps: int = Field(1, ge=1)
    lr_critic: float = Field(3e-4, ge=0)
    lr_actor: float = Field(3e-4, ge=0)
    lr_alpha: float = Field(3e-4, ge=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-8, gt=0)
    # None means minus the action dimensionality
    target_entropy: Optional[float] = Field(None, allow_inf_nan=False)
    auto_alpha: bool = True
    alpha_init: float = Field(1.0, gt=0)
    exploration_noise: float = Field(0.1, ge=0)
    target_noise: float = Field(0.2, ge=0)
    target_noise_clip: float = Field(0.5, ge=0)
    policy_delay: int = Field(2, ge=1)
    log_interval: int = Field(1000, ge=1)
    reward_window: int = Field(20, ge=1)
    network: NetworkConfig = NetworkConfig()
