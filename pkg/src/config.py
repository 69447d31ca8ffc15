"""Application configuration management."""

import json
from pathlib import Path
from typing import Any, Dict, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ConfigError
from .models import (
    Ablation,
    ClassifierConfig,
    CurriculumConfig,
    ModelConfig,
    RewardConfig,
    TrainerConfig,
)


class Settings(BaseSettings):
    """Process-level settings from environment variables (prefix CDL_)."""

    LOG_LEVEL: str = Field(default="INFO")
    DATA_PATH: Path = Field(default=Path("./data"))
    OUTPUT_PATH: Path = Field(default=Path("./runs"))
    DEVICE: str = Field(default="cpu", description="torch device for training and inference")
    RUN_SLOW: bool = Field(default=False, description="Enable desk-scale training tests")

    model_config = SettingsConfigDict(
        env_prefix="CDL_",
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore",
    )

    @field_validator("LOG_LEVEL")
    @classmethod
    def normalize_level(cls, v: str) -> str:
        return v.upper()


class PathsConfig(BaseModel):
    """Filesystem locations used by the CLI."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    data_dir: Path = Field(default_factory=lambda: settings.DATA_PATH)
    output_dir: Path = Field(default_factory=lambda: settings.OUTPUT_PATH)
    vectors_path: Optional[Path] = Field(default=None, description="Text-format word vectors for embedding metrics")


class RunConfig(BaseModel):
    """Everything a run needs, serialized into meta.json."""
    model_config = ConfigDict(extra="forbid", frozen=True)

    model: ModelConfig = Field(default_factory=ModelConfig)
    classifier: ClassifierConfig = Field(default_factory=ClassifierConfig)
    reward: RewardConfig = Field(default_factory=RewardConfig)
    curriculum: CurriculumConfig = Field(default_factory=CurriculumConfig)
    trainer: TrainerConfig = Field(default_factory=TrainerConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)
    seed: int = Field(default=0, ge=0)
    ablation: Ablation = Ablation.FULL

    def with_ablation(self, ablation: Ablation) -> "RunConfig":
        """Return a copy whose reward/curriculum settings realise the ablation."""
        ablation = Ablation(ablation)
        reward = self.reward
        curriculum = self.curriculum
        if ablation is Ablation.EMO:
            reward = reward.model_copy(update={"content_enabled": False})
        elif ablation is Ablation.CON:
            reward = reward.model_copy(update={"emotion_weight": 0.0})
        elif ablation is Ablation.DL:
            curriculum = curriculum.model_copy(update={"enabled": False})
        return self.model_copy(update={"reward": reward, "curriculum": curriculum, "ablation": ablation})

    def seeds(self) -> Dict[str, int]:
        """Derived seeds for every stochastic component."""
        return {
            "run": self.seed,
            "forward_init": self.seed * 1000 + 1,
            "backward_init": self.seed * 1000 + 2,
            "classifier": self.seed * 1000 + 3,
            "forward_sampling": self.seed * 1000 + 11,
            "backward_sampling": self.seed * 1000 + 12,
            "forward_curriculum": self.seed * 1000 + 21,
            "backward_curriculum": self.seed * 1000 + 22,
        }

    def to_meta(self) -> Dict[str, Any]:
        return {"config": self.model_dump(mode="json", by_alias=True), "seeds": self.seeds()}


def _deep_set(target: Dict[str, Any], dotted_key: str, value: Any) -> None:
    parts = dotted_key.split(".")
    node = target
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"Cannot override {dotted_key}: {part} is not a section", [dotted_key])
    node[parts[-1]] = value


def load_run_config(path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Resolve a RunConfig with precedence flags > file > defaults.

    Args:
        path: Optional JSON config file
        overrides: Dotted keys from command-line flags (e.g. {"trainer.batch_size": 8})

    Returns:
        Validated RunConfig
    """
    data: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"Config file not found: {path}", [str(path)])
        try:
            data = json.loads(path.read_text(encoding="utf-8") or "{}")
        except json.JSONDecodeError as e:
            raise ConfigError(f"Config file {path} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise ConfigError(f"Config file {path} must contain a JSON object")

    for key, value in (overrides or {}).items():
        if value is not None:
            _deep_set(data, key, value)

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        locations = [".".join(str(p) for p in err["loc"]) for err in e.errors()]
        raise ConfigError(
            f"Invalid run configuration ({len(locations)} error(s)): " + ", ".join(locations),
            locations,
        ) from e

    if config.ablation is not Ablation.FULL:
        config = config.with_ablation(config.ablation)
    return config


# Global settings instance
settings = Settings()
