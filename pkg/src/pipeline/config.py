"""
Pipeline Config Module - Versioned JSON configuration shared by every subcommand
"""
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union
import logging

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.bctrainer.trainer import BcConfig
from src.exceptions import ConfigError, DimensionMismatchError
from src.expertfilter.filter import FilterConfig
from src.symaug.schema import SymmetrySchema
from src.synthenv.env import ACTION_DIM, STATE_DIM, EnvParams, push_schema
from src.synthenv.policies import WeakKind

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class PathsConfig(BaseModel):
    """Subdirectories of the output directory"""

    model_config = ConfigDict(extra="forbid")

    datasets: str = "datasets"
    checkpoints: str = "checkpoints"
    reports: str = "reports"


class PipelineConfig(BaseModel):
    """
    Everything a run needs; unknown keys are rejected

    One top-level seed drives every random stream. with_seed() copies it
    into the environment, filter and BC configs.
    """

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    version: Literal[1] = 1
    seed: int = Field(default=0, ge=0)
    env: EnvParams = Field(default_factory=EnvParams)
    filter: FilterConfig = Field(default_factory=FilterConfig)
    bc: BcConfig = Field(default_factory=BcConfig)
    symmetry: SymmetrySchema = Field(default_factory=push_schema, alias="schema")
    paths: PathsConfig = Field(default_factory=PathsConfig)
    n_episodes: int = Field(default=500, ge=1)
    weak: WeakKind = WeakKind.PARTIAL
    eval_episodes: int = Field(default=50, ge=1)
    train_seeds: List[int] = Field(default_factory=lambda: [0, 1, 2], min_length=1)
    histogram_bins: int = Field(default=30, ge=1)

    def check_dimensions(self) -> None:
        """Schema, environment and model widths must agree"""
        if self.symmetry.state_dim != STATE_DIM:
            raise DimensionMismatchError("state_dim", STATE_DIM, self.symmetry.state_dim, "schema vs environment")
        if self.symmetry.action_dim != ACTION_DIM:
            raise DimensionMismatchError("action_dim", ACTION_DIM, self.symmetry.action_dim, "schema vs environment")

    def with_seed(self, seed: Optional[int] = None) -> "PipelineConfig":
        seed = self.seed if seed is None else seed
        return override(self, {
            "seed": seed,
            "env.rng_seed": seed,
            "filter.rng_seed": seed,
        })

    def to_payload(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", by_alias=True)


def _one_line(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        where = ".".join(str(p) for p in item.get("loc", ())) or "<root>"
        parts.append(f"{where}: {item.get('msg')}")
    return "; ".join(parts)


def config_from_dict(payload: Dict[str, Any]) -> PipelineConfig:
    try:
        cfg = PipelineConfig.model_validate(payload)
    except ValidationError as e:
        raise ConfigError(_one_line(e))
    cfg.check_dimensions()
    return cfg


def load_config(path: Optional[PathLike] = None) -> PipelineConfig:
    """
    Read a PipelineConfig JSON file

    Args:
        path: Config file; defaults when omitted

    Returns:
        Validated config
    """
    if path is None:
        return config_from_dict({})
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e.msg} at line {e.lineno})")
    if not isinstance(payload, dict):
        raise ConfigError(f"{path}: top level must be an object")
    logger.info(f"Loaded config {path}")
    return config_from_dict(payload)


def override(cfg: PipelineConfig, updates: Dict[str, Any]) -> PipelineConfig:
    """
    Copy of cfg with dotted-path values replaced (None values are skipped)

    Example: override(cfg, {"filter.theta_conf": 0.96, "bc.phase1.steps": 300})
    """
    payload = cfg.to_payload()
    for dotted, value in updates.items():
        if value is None:
            continue
        node = payload
        keys = dotted.split(".")
        for key in keys[:-1]:
            node = node.setdefault(key, {})
        node[keys[-1]] = value.value if hasattr(value, "value") else value
    return config_from_dict(payload)
