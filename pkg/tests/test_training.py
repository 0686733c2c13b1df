"""Tests for the optimizer, the training loop and the multi-run runner."""

import csv
import json

import numpy as np
import pytest

from mmgnn.autodiff.tape import Parameter
from mmgnn.config import ConfigError, ModelConfig, TrainConfig
from mmgnn.graph import Dataset, FeatureMatrix, SplitError
from mmgnn.models import Architecture, MomentKind, SplitRole
from mmgnn.training import (
    Adam,
    AdamState,
    DivergenceError,
    ablation_configs,
    accuracy,
    adam_step,
    evaluate,
    repeat_runs,
    run_ablation,
    search_grid,
    summarize,
    train,
)
from mmgnn.training.runner import write_metrics_jsonl, write_summary_csv


def _model(**overrides):
    return ModelConfig(**{"num_layers": 2, "hidden": 8, "k": 2, "seed": 0, **overrides})


def _train(**overrides):
    return TrainConfig(**{"learning_rate": 0.05, "max_epochs": 30, "patience": 30, "seed": 0, **overrides})


def _reference_adam(theta, grads, lr, wd, beta1=0.9, beta2=0.999, eps=1e-8):
    m = v = 0.0
    trace = []
    for t, g in enumerate(grads, start=1):
        g = g + wd * theta
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        theta = theta - lr * (m / (1 - beta1**t)) / ((v / (1 - beta2**t)) ** 0.5 + eps)
        trace.append(theta)
    return trace


class TestAdam:
    def test_matches_scalar_reference_on_quadratic(self):
        p = Parameter(np.array([[3.0, -2.0]]), "p")
        optimizer = Adam([p], lr=0.1, weight_decay=0.01)
        grads_seen: list[list[float]] = [[], []]
        for _ in range(10):
            optimizer.zero_grad()
            p.grad[...] = 2.0 * p.values  # d/dx of x^2
            for i in range(2):
                grads_seen[i].append(2.0 * float(p.values[0, i]))
            optimizer.step()
        for i, start in enumerate((3.0, -2.0)):
            expected = _reference_adam(start, grads_seen[i], 0.1, 0.01)
            assert p.values[0, i] == pytest.approx(expected[-1], abs=1e-12)

    def test_constant_gradient_steps_by_learning_rate(self):
        values = [np.array([[0.0]])]
        state = AdamState()
        for _ in range(200):
            previous = values[0].copy()
            values, state = adam_step(values, [np.array([[0.7]])], state, lr=0.01)
        assert previous[0, 0] - values[0][0, 0] == pytest.approx(0.01, rel=1e-6)

    def test_zero_gradient_without_decay_is_still(self):
        values, state = adam_step([np.array([[1.5]])], [np.zeros((1, 1))], AdamState(), lr=0.1)
        assert values[0][0, 0] == 1.5
        assert state.step == 1

    def test_weight_decay_shrinks(self):
        values, _ = adam_step([np.array([[1.5, -1.5]])], [np.zeros((1, 2))], AdamState(), lr=0.1, wd=0.01)
        assert np.all(np.abs(values[0]) < 1.5)

    def test_inputs_untouched(self):
        theta = np.array([[1.0]])
        adam_step([theta], [np.ones((1, 1))], AdamState(), lr=0.1)
        assert theta[0, 0] == 1.0


class TestTrain:
    def test_loss_decreases(self, tiny_dataset):
        metrics = train(_model(), _train(), tiny_dataset).metrics
        assert len(metrics.epochs) == 30
        assert metrics.epochs[-1].train_loss < metrics.epochs[0].train_loss

    def test_deterministic(self, tiny_dataset):
        a = train(_model(dropout=0.3), _train(), tiny_dataset).metrics
        b = train(_model(dropout=0.3), _train(), tiny_dataset).metrics
        assert a.model_dump(exclude={"wall_seconds"}) == b.model_dump(exclude={"wall_seconds"})

    def test_best_parameters_restored(self, tmp_path, tiny_dataset):
        result = train(_model(moment=MomentKind.CENTRAL), _train(), tiny_dataset)
        metrics = result.metrics
        assert evaluate(result.model, tiny_dataset, SplitRole.VAL) == metrics.best_val_accuracy
        assert evaluate(result.model, tiny_dataset) == metrics.test_accuracy
        result.model.save(tmp_path / "model.ckpt")
        assert evaluate(tmp_path / "model.ckpt", tiny_dataset) == metrics.test_accuracy
        best = max(metrics.epochs, key=lambda r: r.val_accuracy)
        assert metrics.best_epoch == best.epoch

    def test_early_stopping(self, tiny_dataset):
        metrics = train(_model(), _train(max_epochs=50, patience=1), tiny_dataset).metrics
        assert metrics.stopped_early
        assert len(metrics.epochs) == metrics.best_epoch + 1

    def test_divergence_reported(self, tiny_dataset):
        huge = Dataset(
            tiny_dataset.graph,
            FeatureMatrix(tiny_dataset.features.values * 1e200),
            tiny_dataset.labels,
            tiny_dataset.split,
        )
        with pytest.raises(DivergenceError, match="epoch 1"):
            train(_model(), _train(), huge)

    def test_needs_split(self, tiny_dataset):
        bare = Dataset(tiny_dataset.graph, tiny_dataset.features, tiny_dataset.labels)
        with pytest.raises(SplitError):
            train(_model(), _train(), bare)

    @pytest.mark.parametrize("architecture", list(Architecture))
    def test_every_architecture_trains(self, architecture, tiny_dataset):
        config = _model(architecture=architecture)
        metrics = train(config, _train(max_epochs=5, patience=5), tiny_dataset).metrics
        assert 0.0 <= metrics.test_accuracy <= 1.0


class TestAccuracy:
    def test_perfect_logits(self, tiny_dataset):
        logits = np.eye(3)[tiny_dataset.labels.labels]
        assert accuracy(logits, tiny_dataset, SplitRole.TRAIN) == 1.0

    def test_ties_pick_lowest_class(self, tiny_dataset):
        nodes = tiny_dataset.split.indices(SplitRole.TEST)
        expected = float(np.mean(tiny_dataset.labels.labels[nodes] == 0))
        assert accuracy(np.zeros((12, 3)), tiny_dataset, SplitRole.TEST) == expected

    def test_empty_role(self, tiny_dataset):
        with pytest.raises(SplitError, match="unused"):
            accuracy(np.zeros((12, 3)), tiny_dataset, SplitRole.UNUSED)


class TestRunner:
    def test_summarize(self):
        row = summarize("M-1", [0.5, 0.7])
        assert row.mean_accuracy == pytest.approx(0.6)
        assert row.std_accuracy == pytest.approx(np.sqrt(0.02))
        assert summarize("M-1", [0.5]).std_accuracy == 0.0

    def test_parallel_matches_serial(self, tiny_dataset):
        short = _train(max_epochs=8, patience=8)
        configs = [("a", _model(), short), ("b", _model(k=3), short)]
        serial, _ = repeat_runs(configs, 3, tiny_dataset, max_workers=1)
        parallel, _ = repeat_runs(configs, 3, tiny_dataset, max_workers=4)
        assert [r.model_dump() for r in serial] == [r.model_dump() for r in parallel]
        assert [r.name for r in serial] == ["a", "b"]

    def test_repeats_use_distinct_seeds(self, tiny_dataset):
        _, outcomes = repeat_runs([("a", _model(), _train(max_epochs=3, patience=3))], 3, tiny_dataset)
        assert [o.metrics.seed for o in outcomes] == [0, 1, 2]
        assert [o.task.model.seed for o in outcomes] == [0, 1, 2]

    def test_ablation_rows(self):
        names = [name for name, _ in ablation_configs(_model(k=3))]
        assert names == ["M-1", "M-2", "M-3", "Ensemble", "MLP", "Attention"]

    def test_ablation_needs_mixed_moments(self):
        with pytest.raises(ConfigError):
            ablation_configs(_model(architecture=Architecture.MEAN))

    def test_run_ablation(self, tiny_dataset):
        rows = run_ablation(_model(k=2), _train(max_epochs=3, patience=3), tiny_dataset)
        assert [r.name for r in rows] == ["M-1", "M-2", "Ensemble", "MLP", "Attention"]
        assert all(r.runs == 1 for r in rows)

    def test_search_grid(self, tiny_dataset):
        grid = {"hidden": [4, 8], "learning_rate": [0.01]}
        result = search_grid(_model(), _train(max_epochs=5, patience=5), grid, tiny_dataset)
        assert [(r["hidden"], r["learning_rate"]) for r in result.rows] == [(4, 0.01), (8, 0.01)]
        assert result.model.hidden == result.best["hidden"]

    def test_search_grid_skips_invalid_points(self, tiny_dataset):
        result = search_grid(
            _model(moment=MomentKind.CENTRAL), _train(max_epochs=3, patience=3), {"k": [1, 2]}, tiny_dataset
        )
        assert [r["k"] for r in result.rows] == [2]

    def test_search_grid_rejects_unknown_keys(self, tiny_dataset):
        with pytest.raises(ConfigError, match="dropout"):
            search_grid(_model(), _train(), {"dropout": [0.1]}, tiny_dataset)


class TestRunnerOutputs:
    def test_metrics_jsonl(self, tmp_path, tiny_dataset):
        metrics = train(_model(), _train(max_epochs=4, patience=4), tiny_dataset).metrics
        write_metrics_jsonl(tmp_path / "metrics.jsonl", metrics)
        lines = (tmp_path / "metrics.jsonl").read_text().splitlines()
        assert len(lines) == 4
        first = json.loads(lines[0])
        assert first["epoch"] == 1
        assert "wall_seconds" not in first

    def test_summary_csv(self, tmp_path):
        write_summary_csv(tmp_path / "summary.csv", [summarize("Attention", [0.5, 0.75])])
        rows = list(csv.reader((tmp_path / "summary.csv").open()))
        assert rows[0] == ["model", "runs", "mean_accuracy", "std_accuracy", "accuracies"]
        assert rows[1][:3] == ["Attention", "2", "0.625"]
        assert rows[1][4] == "0.5;0.75"

