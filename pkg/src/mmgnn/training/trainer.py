"""Full-batch training with early stopping on validation accuracy."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from mmgnn.autodiff.ops import softmax_cross_entropy
from mmgnn.autodiff.tape import NonFiniteError, Tape, Tensor
from mmgnn.config import ModelConfig, TrainConfig
from mmgnn.graph.storage import Dataset, SplitError
from mmgnn.model.network import ForwardResult, MixMomentGNN
from mmgnn.models import EpochRecord, RunMetrics, SplitRole
from mmgnn.seeding import DROPOUT_STREAM, rng_for
from mmgnn.training.optim import Adam

logger = logging.getLogger(__name__)

LOG_EVERY = 10


class DivergenceError(ArithmeticError):
    """Raised when the training loss or an intermediate becomes non-finite."""


@dataclass
class TrainResult:
    metrics: RunMetrics
    model: MixMomentGNN


def accuracy(logits: np.ndarray, dataset: Dataset, role: SplitRole) -> float:
    """Argmax accuracy over nodes holding `role`; ties go to the lowest class index."""
    nodes = _split(dataset).indices(role)
    if nodes.size == 0:
        raise SplitError(f"no nodes with role '{role.value}'")
    predicted = np.argmax(logits[nodes], axis=1)
    return float(np.mean(predicted == dataset.labels.labels[nodes]))


def _split(dataset: Dataset):
    if dataset.split is None:
        raise SplitError(f"dataset '{dataset.name}' has no train/val/test split")
    return dataset.split


def _eval_forward(model: MixMomentGNN, dataset: Dataset, x: Tensor) -> ForwardResult:
    return model.forward(dataset.graph, x)


def train(model_config: ModelConfig, train_config: TrainConfig, dataset: Dataset) -> TrainResult:
    """Train with Adam; restore the best-validation parameters before testing."""
    split = _split(dataset)
    start = time.perf_counter()
    model = MixMomentGNN(model_config, dataset.feature_dim, dataset.num_classes)
    optimizer = Adam(model.parameters(), lr=train_config.learning_rate, weight_decay=train_config.weight_decay)
    dropout_rng = rng_for(train_config.seed, DROPOUT_STREAM) if model_config.dropout > 0 else None
    x = Tensor(dataset.features.values)

    metrics = RunMetrics(seed=train_config.seed)
    best_snapshot = model.snapshot()
    best_val = -1.0
    waited = 0

    for epoch in range(1, train_config.max_epochs + 1):
        optimizer.zero_grad()
        try:
            with Tape() as tape:
                logits = model.forward(dataset.graph, x, rng=dropout_rng).logits
                loss = softmax_cross_entropy(logits, dataset.labels, split, SplitRole.TRAIN)
            tape.backward(loss)
            optimizer.step()
            evaluated = _eval_forward(model, dataset, x).logits
            train_loss = softmax_cross_entropy(evaluated, dataset.labels, split, SplitRole.TRAIN).item()
            val_loss = softmax_cross_entropy(evaluated, dataset.labels, split, SplitRole.VAL).item()
        except NonFiniteError as e:
            raise DivergenceError(f"training diverged at epoch {epoch}: {e}") from e

        record = EpochRecord(
            epoch=epoch,
            train_loss=train_loss,
            train_accuracy=accuracy(evaluated.values, dataset, SplitRole.TRAIN),
            val_loss=val_loss,
            val_accuracy=accuracy(evaluated.values, dataset, SplitRole.VAL),
        )
        metrics.epochs.append(record)

        if record.val_accuracy > best_val:
            best_val = record.val_accuracy
            best_snapshot = model.snapshot()
            metrics.best_epoch = epoch
            waited = 0
        else:
            waited += 1

        if epoch % LOG_EVERY == 0:
            logger.info(
                f"epoch {epoch:4d}  train_loss={train_loss:.4f}  "
                f"val_acc={record.val_accuracy:.4f}  best={best_val:.4f}@{metrics.best_epoch}"
            )
        if waited >= train_config.patience:
            metrics.stopped_early = True
            logger.info(f"Early stop at epoch {epoch} (best epoch {metrics.best_epoch})")
            break

    model.restore(best_snapshot)
    final = _eval_forward(model, dataset, x).logits.values
    metrics.best_val_accuracy = best_val
    metrics.test_accuracy = accuracy(final, dataset, SplitRole.TEST)
    metrics.wall_seconds = time.perf_counter() - start
    logger.info(
        f"Run seed={train_config.seed}: test_acc={metrics.test_accuracy:.4f} "
        f"(best epoch {metrics.best_epoch}, {metrics.wall_seconds:.1f}s)"
    )
    return TrainResult(metrics=metrics, model=model)


def evaluate(
    checkpoint: MixMomentGNN | str | Path,
    dataset: Dataset,
    role: SplitRole = SplitRole.TEST,
) -> float:
    model = checkpoint if isinstance(checkpoint, MixMomentGNN) else MixMomentGNN.load(checkpoint)
    logits = _eval_forward(model, dataset, Tensor(dataset.features.values)).logits.values
    return accuracy(logits, dataset, role)


def representations(model: MixMomentGNN, dataset: Dataset, layer: Optional[int] = None) -> np.ndarray:
    """Output of `layer` (default: the last one) for every node."""
    result = _eval_forward(model, dataset, Tensor(dataset.features.values))
    index = len(result.layers) - 1 if layer is None else layer
    return result.layers[index].output.values
