"""MM-GNN data models - enums and report schemas shared across the package."""

from __future__ import annotations

import math
from enum import Enum
from typing import Any, Optional

from pydantic import BaseModel, Field, model_validator


# ---------------------------------------------------------------------------
# Enums
# ---------------------------------------------------------------------------

class SplitRole(str, Enum):
    TRAIN = "train"
    VAL = "val"
    TEST = "test"
    UNUSED = "unused"


class MomentKind(str, Enum):
    ORIGIN = "origin"
    CENTRAL = "central"


class FusionKind(str, Enum):
    ATTENTION = "attention"
    MLP = "mlp"
    MEAN_ENSEMBLE = "mean"
    SINGLE_MOMENT = "single"


class AttentionActivation(str, Enum):
    SIGMOID = "sigmoid"
    SOFTMAX = "softmax"     # normalized across moment orders


class Architecture(str, Enum):
    MMGNN = "mmgnn"
    MEAN = "mean"
    MAX = "max"
    SUM = "sum"


class StatisticFamily(str, Enum):
    MEAN = "mean"
    VARIANCE = "variance"
    SKEWNESS = "skewness"
    ORIGIN_MOMENT = "origin"
    CENTRAL_MOMENT = "central"
    STANDARDIZED_MOMENT = "standardized"


# ---------------------------------------------------------------------------
# Parameterized kinds (parse from "single:2", "central:3", ...)
# ---------------------------------------------------------------------------

def _split_tagged(text: str) -> tuple[str, Optional[int]]:
    head, _, tail = text.strip().lower().partition(":")
    if not tail:
        return head, None
    try:
        return head, int(tail)
    except ValueError as e:
        raise ValueError(f"Order must be an integer in '{text}'") from e


class FusionMode(BaseModel):
    """How the per-order signatures of a layer are combined."""

    kind: FusionKind = FusionKind.ATTENTION
    order: Optional[int] = None  # only for SINGLE_MOMENT

    @model_validator(mode="before")
    @classmethod
    def _from_string(cls, data: Any) -> Any:
        if isinstance(data, str):
            head, order = _split_tagged(data)
            return {"kind": head, "order": order}
        return data

    @model_validator(mode="after")
    def _check_order(self) -> FusionMode:
        if self.kind == FusionKind.SINGLE_MOMENT:
            if self.order is None or self.order < 1:
                raise ValueError("single-moment fusion needs an order >= 1 (e.g. 'single:2')")
        elif self.order is not None:
            raise ValueError(f"fusion '{self.kind.value}' takes no order")
        return self

    @classmethod
    def parse(cls, text: str) -> FusionMode:
        return cls.model_validate(text)

    @classmethod
    def single(cls, order: int) -> FusionMode:
        return cls(kind=FusionKind.SINGLE_MOMENT, order=order)

    @property
    def label(self) -> str:
        """Ablation table row name (M-1, Ensemble, MLP, Attention)."""
        return {
            FusionKind.ATTENTION: "Attention",
            FusionKind.MLP: "MLP",
            FusionKind.MEAN_ENSEMBLE: "Ensemble",
            FusionKind.SINGLE_MOMENT: f"M-{self.order}",
        }[self.kind]

    def __str__(self) -> str:
        if self.kind == FusionKind.SINGLE_MOMENT:
            return f"single:{self.order}"
        return self.kind.value


class StatisticKind(BaseModel):
    """A scalar neighborhood statistic; moment families carry an order."""

    family: StatisticFamily
    order: Optional[int] = None

    @model_validator(mode="before")
    @classmethod
    def _from_string(cls, data: Any) -> Any:
        if isinstance(data, str):
            head, order = _split_tagged(data)
            return {"family": head, "order": order}
        return data

    @model_validator(mode="after")
    def _check_order(self) -> StatisticKind:
        named = (StatisticFamily.MEAN, StatisticFamily.VARIANCE, StatisticFamily.SKEWNESS)
        if self.family in named:
            if self.order is not None:
                raise ValueError(f"statistic '{self.family.value}' takes no order")
            return self
        if self.order is None or self.order < 1:
            raise ValueError(f"statistic '{self.family.value}' needs an order >= 1")
        if self.family == StatisticFamily.STANDARDIZED_MOMENT and self.order < 3:
            raise ValueError("standardized moments start at order 3 (lower orders are constant)")
        return self

    @classmethod
    def parse(cls, text: str) -> StatisticKind:
        return cls.model_validate(text)

    def __str__(self) -> str:
        if self.order is None:
            return self.family.value
        return f"{self.family.value}:{self.order}"


DEFAULT_STATISTICS = ("mean", "variance", "skewness")


# ---------------------------------------------------------------------------
# Training reports
# ---------------------------------------------------------------------------

class EpochRecord(BaseModel):
    """One line of metrics.jsonl."""
    epoch: int
    train_loss: float
    train_accuracy: float
    val_loss: float
    val_accuracy: float


class RunMetrics(BaseModel):
    seed: int
    epochs: list[EpochRecord] = Field(default_factory=list)
    best_epoch: int = 0
    best_val_accuracy: float = 0.0
    test_accuracy: float = 0.0
    stopped_early: bool = False
    wall_seconds: float = 0.0  # excluded from deterministic outputs


class SummaryRow(BaseModel):
    """Mean and sample standard deviation of test accuracy over repeated seeds."""
    name: str
    runs: int
    mean_accuracy: float
    std_accuracy: float
    accuracies: list[float] = Field(default_factory=list)


# ---------------------------------------------------------------------------
# Analysis / verification reports
# ---------------------------------------------------------------------------

def format_real(value: float) -> str:
    """CSV rendering; +inf sentinels become 'inf', missing values 'nan'."""
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if math.isnan(value):
        return "nan"
    return repr(float(value))


class GradcheckReport(BaseModel):
    max_relative_error: float
    coordinates: int
    tolerance: float
    passed: bool
    worst_parameter: str = ""


class ScalingPoint(BaseModel):
    num_edges: int
    seconds: float


class ScalingReport(BaseModel):
    points: list[ScalingPoint] = Field(default_factory=list)
    intercept: float = 0.0
    slope: float = 0.0
    r_squared: float = 0.0
    passed: bool = False
