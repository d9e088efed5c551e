"""Experiment configuration: validation, file loading, hashing."""

import hashlib
import json
from typing import Literal, Optional

from pydantic import BaseModel, Field, ValidationError, model_validator

from .errors import ConfigError
from .model import HyperParams

__all__ = ["ExperimentConfig", "load_config", "config_from_dict", "config_hash",
           "hyperparams_from_config"]


class ExperimentConfig(BaseModel):
    """Everything a run needs; file paths are resolved against ``dataset``.

    ``views`` is the arrival order. The three component switches control
    the main run: partition masking, retention loss, Hebbian
    reconstruction.
    """

    dataset: str
    views: list[str] = Field(min_length=1)
    label_file: str = "labels.txt"
    split_file: Optional[str] = None
    k: int = Field(default=15, ge=1)
    learning_rate: float = Field(default=0.05, gt=0)
    hidden_dim: int = Field(default=16, ge=1)
    beta: float = Field(default=0.01, ge=0)
    epsilon: float = Field(default=0.01, ge=0)
    theta: float = Field(default=0.1, ge=0, le=1)
    epochs_per_view: int = Field(default=600, ge=0)
    seed: int = 0
    label_fraction: float = Field(default=0.1, gt=0, lt=1)
    mask_mode: Literal["keep", "suppress"] = "keep"
    c1_mask: bool = True
    c2_retention: bool = True
    c3_hebbian: bool = True
    deterministic: bool = True
    output: str = "mvil-out"

    @model_validator(mode="after")
    def _check_theta_against_views(self):
        v = len(self.views)
        if self.theta >= 1.0 / v:
            raise ValueError(
                f"theta must be < 1/V: got theta={self.theta} with V={v} view(s), "
                f"1/V={1.0 / v:.6g}"
            )
        return self


def config_from_dict(data: dict) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def config_hash(config: ExperimentConfig) -> str:
    """Stable digest over every config field."""
    canonical = json.dumps(config.model_dump(), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def hyperparams_from_config(config: ExperimentConfig) -> HyperParams:
    """Training hyperparameters for the main run, component switches applied."""
    return HyperParams(
        learning_rate=config.learning_rate,
        hidden_dim=config.hidden_dim,
        k=config.k,
        epochs_per_view=config.epochs_per_view,
        epsilon=config.epsilon if config.c3_hebbian else 0.0,
        theta=config.theta,
        beta=config.beta if config.c2_retention else 0.0,
        mask_mode=config.mask_mode,
        use_partition_mask=config.c1_mask,
    )
