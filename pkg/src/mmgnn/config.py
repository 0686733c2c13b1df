"""MM-GNN configuration - Pydantic models for run configs plus environment settings."""

from __future__ import annotations

import json
import os
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from mmgnn.graph.splits import PerClassSplit, RatioSplit, SplitPolicy
from mmgnn.graph.synthetic import SyntheticSpec
from mmgnn.models import (
    DEFAULT_STATISTICS,
    Architecture,
    AttentionActivation,
    FusionKind,
    FusionMode,
    MomentKind,
    StatisticKind,
)

load_dotenv()

MAX_ORDER = 8


class ConfigError(ValueError):
    """Raised when a run config cannot be read or is inconsistent."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ModelConfig(_Strict):
    architecture: Architecture = Architecture.MMGNN
    num_layers: int = Field(default=2, ge=1)
    hidden: int = Field(default=64, ge=1)
    k: int = Field(default=3, ge=1, le=MAX_ORDER)  # largest moment order
    moment: MomentKind = MomentKind.ORIGIN
    fusion: FusionMode = Field(default_factory=FusionMode)
    attention_activation: AttentionActivation = AttentionActivation.SIGMOID
    residual: bool = True
    root_eps: float = Field(default=1e-6, ge=0.0)
    dropout: float = Field(default=0.0, ge=0.0, lt=1.0)
    seed: int = 0

    @model_validator(mode="after")
    def _check_orders(self) -> ModelConfig:
        if self.moment == MomentKind.CENTRAL and self.k < 2:
            raise ValueError("central moments need k >= 2 (the first central moment is identically zero)")
        if self.fusion.kind == FusionKind.SINGLE_MOMENT and self.fusion.order > self.k:
            raise ValueError(f"fusion {self.fusion} exceeds k={self.k}")
        return self


class TrainConfig(_Strict):
    learning_rate: float = Field(default=1e-2, ge=1e-4, le=1e-1)
    weight_decay: float = Field(default=5e-4, ge=1e-4, le=1e-2)
    max_epochs: int = Field(default=200, ge=1)
    patience: int = Field(default=50, ge=1)
    seed: int = 0
    repeats: int = Field(default=1, ge=1)

    @model_validator(mode="after")
    def _check_patience(self) -> TrainConfig:
        if self.patience > self.max_epochs:
            raise ValueError(f"patience={self.patience} exceeds max_epochs={self.max_epochs}")
        return self


class AnalysisConfig(_Strict):
    statistics: list[StatisticKind] = Field(
        default_factory=lambda: [StatisticKind.parse(s) for s in DEFAULT_STATISTICS]
    )
    bins: int = Field(default=16, ge=2)
    p: float = Field(default=2.0, ge=1.0)
    ordered_fisher: bool = False
    average_dimensions: bool = True
    gamma_order: int = Field(default=2, ge=2)  # central order compared against mean aggregation


class DatasetConfig(_Strict):
    path: Optional[str] = None
    synthetic: Optional[SyntheticSpec] = None
    self_loops: bool = False

    @model_validator(mode="after")
    def _one_source(self) -> DatasetConfig:
        if (self.path is None) == (self.synthetic is None):
            raise ValueError("dataset needs exactly one of 'path' or 'synthetic'")
        return self


class RunConfig(_Strict):
    dataset: DatasetConfig
    split: Optional[SplitPolicy] = None  # None: use split.tsv when present
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)
    analysis: AnalysisConfig = Field(default_factory=AnalysisConfig)
    output_dir: str = "runs/latest"

    @classmethod
    def load(cls, path: str | Path) -> RunConfig:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from e
        try:
            return cls.model_validate(raw)
        except ValidationError as e:
            raise ConfigError(f"{path}: {e}") from e

    def dump(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.model_dump_json(indent=2) + "\n", encoding="utf-8")
        return path

    def default_split(self) -> PerClassSplit | RatioSplit:
        """Policy used when neither the config nor the dataset provides a split."""
        if self.split is not None:
            return self.split
        if self.dataset.synthetic is not None:
            return RatioSplit()
        return PerClassSplit()


class RuntimeSettings(BaseModel):
    threads: int = Field(
        default_factory=lambda: int(os.getenv("MMGNN_THREADS", "0")) or (os.cpu_count() or 1)
    )
    log_level: str = Field(default_factory=lambda: os.getenv("MMGNN_LOG_LEVEL", "INFO"))

    @classmethod
    def from_env(cls) -> RuntimeSettings:
        return cls()
