"""Experiment configuration: flat ``section.key = value`` files validated by pydantic"""

import logging
from pathlib import Path
from typing import Literal, Optional

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from app.core.errors import ConfigError
from app.envs.tasks import EnvConfig
from app.policy.params import TABULAR

import config

logger = logging.getLogger(__name__)

DEFAULT_LR = {"sgd": 0.05, "adam": 0.005}


class PolicySection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    arch: Literal["tabular_softmax", "mlp"] = TABULAR
    context_window: int = Field(8, ge=1)
    hidden_width: int = Field(16, ge=1)
    init_scale: float = Field(0.0, ge=0.0)
    seed: int = Field(0, ge=0)
    max_table_rows: int = Field(65536, ge=1)


class TrainSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    algorithm: Literal["fr3e", "grpo_pp"] = "fr3e"
    steps: int = Field(100, ge=0)
    seed: int = Field(0, ge=0)
    optimizer: Literal["sgd", "adam"] = "sgd"
    lr: float = Field(0.05, gt=0.0)
    batch_groups: int = Field(64, ge=1)
    group_size: int = Field(8, ge=2)
    eps_low: float = Field(0.22, ge=0.0, lt=1.0)
    eps_high: float = Field(0.28, ge=0.0)
    mini_epochs: int = Field(1, ge=1)
    mini_batch_groups: Optional[int] = Field(None, ge=1)
    normalize_std: bool = False
    max_waves: int = Field(16, ge=1)
    checkpoint_every: int = Field(config.CHECKPOINT_EVERY, ge=0)

    @model_validator(mode="before")
    @classmethod
    def _default_lr(cls, data):
        # learning rate defaults depend on the optimizer
        if isinstance(data, dict) and data.get("lr") in (None, ""):
            data = {**data, "lr": DEFAULT_LR.get(data.get("optimizer", "sgd"), DEFAULT_LR["sgd"])}
        if isinstance(data, dict) and data.get("mini_batch_groups") in ("", "0", 0):
            data = {**data, "mini_batch_groups": None}
        return data


class Fr3eSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    top_k: int = Field(3, ge=0)
    rollouts_per_state: int = Field(4, ge=0)
    include_base_loss: bool = True
    modulate: bool = True

    @property
    def explores(self) -> bool:
        return self.top_k > 0 and self.rollouts_per_state > 0


class EvalSection(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    prompts: int = Field(32, ge=1)
    rollouts: int = Field(8, ge=1)
    every: int = Field(10, ge=0)
    greedy: bool = False


class TrainConfig(BaseModel):
    """The whole experiment; a run is a pure function of this object"""
    model_config = ConfigDict(extra="forbid", frozen=True)

    env: EnvConfig = EnvConfig()
    policy: PolicySection = PolicySection()
    train: TrainSection = TrainSection()
    fr3e: Fr3eSection = Fr3eSection()
    eval: EvalSection = EvalSection()


SECTIONS = tuple(TrainConfig.model_fields)


def parse_config(values: dict) -> TrainConfig:
    """Build a TrainConfig from flat ``section.key`` -> value pairs"""
    nested = {}
    for key, value in values.items():
        section, dot, field = key.partition(".")
        if not dot or not field:
            raise ConfigError(f"config key '{key}' is not of the form section.key")
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section '{section}' (expected one of {', '.join(SECTIONS)})")
        if value is None:
            raise ConfigError(f"config key '{key}' has no value")
        nested.setdefault(section, {})[field] = value
    try:
        return TrainConfig(**nested)
    except ValidationError as e:
        raise ConfigError(f"invalid config: {e}") from e


def load_config(path: Path) -> TrainConfig:
    """Read and validate a config file"""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    values = dotenv_values(path, interpolate=False)
    cfg = parse_config(dict(values))
    logger.debug(f"Loaded config {path}: {cfg.train.algorithm} on {cfg.env.family}")
    return cfg


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: TrainConfig) -> str:
    """Render the validated config back to the flat text format; load_config reads it back unchanged"""
    lines = []
    for section in SECTIONS:
        lines.append(f"# {section}")
        for field, value in getattr(cfg, section).model_dump().items():
            if value is None:
                continue
            lines.append(f"{section}.{field} = {_render(value)}")
    return "\n".join(lines) + "\n"


def write_config(path: Path, cfg: TrainConfig) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(dump_config(cfg), encoding="utf-8")
    return path
