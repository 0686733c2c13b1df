"""Tests for neighborhood statistics, discrimination scores, complexity and the analysis writers."""

import csv
import math

import numpy as np
import pytest

from mmgnn.analysis import (
    AnalysisError,
    ComplexityConfig,
    DeviationBound,
    StatisticGrid,
    attention_summary,
    complexity_measure,
    deviation_bound,
    empirical_remainder,
    fisher_index,
    moment_feature_gamma,
    mutual_information,
    neighborhood_statistic,
    neighborhood_statistics,
    statistic_grid,
)
from mmgnn.analysis.report import write_attention_csv, write_gamma, write_grid_csv, write_stats_csv
from mmgnn.autodiff.tape import Tensor
from mmgnn.config import ModelConfig
from mmgnn.graph import LabelVector, SparseGraph, SyntheticSpec, generate_theorem1_graph
from mmgnn.model import MixMomentGNN
from mmgnn.models import MomentKind, StatisticKind


def _kind(text):
    return StatisticKind.parse(text)


def _labels(values):
    return LabelVector.from_array(np.asarray(values))


class TestNeighborhoodStatistics:
    def test_two_point_neighborhood(self, two_neighbor_graph):
        x = np.array([[0.0], [1.0], [3.0], [7.0]])
        assert neighborhood_statistic(two_neighbor_graph, x, 0, _kind("mean"))[0] == 2.0
        assert neighborhood_statistic(two_neighbor_graph, x, 0, _kind("variance"))[0] == 1.0
        assert neighborhood_statistic(two_neighbor_graph, x, 0, _kind("skewness"))[0] == 0.0

    def test_isolated_node_is_missing(self, two_neighbor_graph):
        x = np.array([[0.0], [1.0], [3.0], [7.0]])
        assert np.isnan(neighborhood_statistic(two_neighbor_graph, x, 0, _kind("mean"))[3])

    def test_constant_neighborhood_skewness_is_zero(self, two_neighbor_graph):
        x = np.array([[0.0], [1.0], [3.0], [7.0]])
        assert neighborhood_statistic(two_neighbor_graph, x, 0, _kind("skewness"))[1] == 0.0

    def test_skewed_neighborhood(self):
        star = SparseGraph.from_edges(4, np.array([[0, 1], [0, 2], [0, 3]]))
        x = np.array([[5.0], [0.0], [0.0], [3.0]])
        assert neighborhood_statistic(star, x, 0, _kind("skewness"))[0] == pytest.approx(0.70711, abs=1e-5)
        standardized = neighborhood_statistic(star, x, 0, _kind("standardized:3"))[0]
        assert standardized == pytest.approx(1 / math.sqrt(2))

    def test_matches_direct_evaluation(self, small_synthetic):
        g, x = small_synthetic.graph, small_synthetic.features.values
        stats = neighborhood_statistics(g, x, _kind("central:3"))
        for node in (0, 17, 299):
            values = x[g.neighbors(node)]
            expected = np.mean((values - values.mean(axis=0)) ** 3, axis=0)
            assert np.allclose(stats[node], expected)

    def test_dimension_out_of_range(self, path_graph):
        with pytest.raises(AnalysisError):
            neighborhood_statistic(path_graph, np.ones((3, 2)), 2, _kind("mean"))

    def test_standardized_order_starts_at_three(self):
        with pytest.raises(ValueError):
            _kind("standardized:2")


class TestFisherIndex:
    def test_two_classes(self):
        assert fisher_index(np.array([0.0, 2.0, 4.0, 6.0]), _labels([0, 0, 1, 1])) == pytest.approx(8.0)

    def test_ordered_pairs_double(self):
        values, labels = np.array([0.0, 2.0, 4.0, 6.0]), _labels([0, 0, 1, 1])
        assert fisher_index(values, labels, ordered=True) == pytest.approx(16.0)

    def test_identical_classes(self):
        assert fisher_index(np.array([1.0, 3.0, 1.0, 3.0]), _labels([0, 0, 1, 1])) == 0.0

    def test_coincident_pair_contributes_nothing(self):
        values = np.array([0.0, 2.0, 0.0, 2.0, 4.0, 6.0])
        labels = _labels([0, 0, 1, 1, 2, 2])
        assert fisher_index(values, labels) == pytest.approx(16.0)

    def test_zero_variance_distinct_means_is_infinite(self):
        assert fisher_index(np.array([1.0, 1.0, 2.0, 2.0]), _labels([0, 0, 1, 1])) == math.inf

    def test_affine_invariant(self, rng):
        values = rng.normal(size=60) + np.repeat([0.0, 1.0, 3.0], 20)
        labels = _labels(np.repeat([0, 1, 2], 20))
        base = fisher_index(values, labels)
        assert fisher_index(-2.5 * values + 7.0, labels) == pytest.approx(base, rel=1e-9)

    def test_missing_values_dropped(self):
        values = np.array([0.0, 2.0, np.nan, 4.0, 6.0])
        assert fisher_index(values, _labels([0, 0, 1, 1, 1])) == pytest.approx(8.0)

    def test_too_few_samples(self):
        with pytest.raises(AnalysisError, match="fewer than 2"):
            fisher_index(np.array([0.0, 1.0, 2.0]), _labels([0, 0, 1]))


class TestMutualInformation:
    def test_perfect_dependence(self):
        labels = np.repeat([0, 1], 50)
        assert mutual_information(labels.astype(float), _labels(labels), bins=2) == pytest.approx(math.log(2))

    def test_constant_values(self):
        assert mutual_information(np.ones(100), _labels(np.arange(100) % 2)) == 0.0

    def test_bounds(self, rng):
        labels = rng.integers(0, 3, size=500)
        labels[:3] = [0, 1, 2]
        values = rng.normal(size=500) + labels
        mi = mutual_information(values, _labels(labels), bins=8)
        assert 0.0 <= mi <= min(math.log(8), math.log(3)) + 1e-9

    def test_gaussian_mixture_against_fine_estimate(self):
        rng = np.random.default_rng(8)
        labels = np.repeat([0, 1], 5000)
        values = rng.normal(size=10_000) + 2.0 * labels
        # closed form via numeric integration of the two-component mixture
        grid = np.linspace(-8.0, 10.0, 200_001)
        step = grid[1] - grid[0]
        p0 = np.exp(-0.5 * grid**2) / math.sqrt(2 * math.pi)
        p1 = np.exp(-0.5 * (grid - 2.0) ** 2) / math.sqrt(2 * math.pi)
        mix = 0.5 * (p0 + p1)
        integrand = 0.5 * p0 * np.log(p0 / mix) + 0.5 * p1 * np.log(p1 / mix)
        expected = float(np.sum(integrand) * step)
        estimate = mutual_information(values, _labels(labels), bins=32)
        assert estimate == pytest.approx(expected, rel=0.1)

    def test_too_few_samples(self):
        with pytest.raises(AnalysisError, match="too few"):
            mutual_information(np.arange(10.0), _labels(np.arange(10) % 2), bins=16)


class TestStatisticGrid:
    def test_variance_separates_synthetic_classes(self, small_synthetic):
        kinds = [_kind("mean"), _kind("variance")]
        grid = statistic_grid(
            small_synthetic.graph, small_synthetic.features.values, small_synthetic.labels, kinds, "fisher"
        )
        assert grid.values.shape == (2, 4)
        assert grid.dimensions == ["x0", "x1", "x2", "x3"]
        assert grid.averaged[1] > 1.0
        assert grid.averaged[1] > 5 * grid.averaged[0]

    def test_average_first_gives_one_column(self, small_synthetic):
        grid = statistic_grid(
            small_synthetic.graph,
            small_synthetic.features.values,
            small_synthetic.labels,
            [_kind("skewness")],
            "mi",
            bins=8,
            average_first=True,
        )
        assert grid.dimensions == ["all"]
        assert grid.values.shape == (1, 1)


class TestComplexity:
    def test_two_square_classes(self):
        h = np.array([[0.0, 0.0], [0.0, 2.0], [4.0, 0.0], [4.0, 2.0]])
        assert complexity_measure(h, _labels([0, 0, 1, 1])) == pytest.approx(0.5)

    def test_coinciding_means_infinite(self):
        h = np.array([[-1.0], [1.0], [-3.0], [3.0]])
        assert complexity_measure(h, _labels([0, 0, 1, 1])) == math.inf

    def test_points_without_spread(self):
        assert complexity_measure(np.array([[0.0], [5.0]]), _labels([0, 1])) == 0.0

    def test_translation_and_scale_invariant(self, rng):
        h = rng.normal(size=(40, 3)) + np.repeat([[0.0, 0.0, 0.0], [2.0, 1.0, 0.0]], 20, axis=0)
        labels = _labels(np.repeat([0, 1], 20))
        base = complexity_measure(h, labels, ComplexityConfig(p=3.0))
        assert complexity_measure(h + 11.0, labels, ComplexityConfig(p=3.0)) == pytest.approx(base, rel=1e-9)
        assert complexity_measure(0.2 * h, labels, ComplexityConfig(p=3.0)) == pytest.approx(base, rel=1e-9)

    def test_needs_two_classes(self):
        with pytest.raises(AnalysisError):
            complexity_measure(np.ones((3, 1)), _labels([0, 0, 0]))

    def test_mean_features_lose_to_second_central_moment(self):
        dataset = generate_theorem1_graph(SyntheticSpec(nodes_per_class=1000, neighbors_per_node=10, seed=0))
        g, x, labels = dataset.graph, dataset.features.values, dataset.labels
        mean_gamma = moment_feature_gamma(g, x, labels, MomentKind.ORIGIN, 1)
        central_gamma = moment_feature_gamma(g, x, labels, MomentKind.CENTRAL, 2)
        assert mean_gamma >= 10 * central_gamma


class TestDeviationBound:
    def test_value(self):
        assert deviation_bound(DeviationBound(epsilon=0.1, c=1.0, k=3)) == pytest.approx(1e-4 / 24)

    def test_zero_radius(self):
        assert deviation_bound(DeviationBound(epsilon=0.0, c=2.0, k=4)) == 0.0

    def test_decreasing_in_order(self):
        bounds = [deviation_bound(DeviationBound(epsilon=0.5, c=1.5, k=k)) for k in range(1, 8)]
        assert all(a > b for a, b in zip(bounds, bounds[1:]))

    def test_empirical_remainder_within_bound(self, rng):
        values = rng.uniform(-1.0, 1.0, size=1000)
        assert empirical_remainder(values, 0.1, 3) <= deviation_bound(DeviationBound(epsilon=0.1, c=1.0, k=3))

    def test_positive_scale_required(self):
        with pytest.raises(ValueError):
            DeviationBound(epsilon=0.1, c=0.0, k=2)


class TestAttentionSummary:
    def test_zero_model_is_half(self, tiny_dataset):
        model = MixMomentGNN(ModelConfig(hidden=4, k=3), 3, 3)
        for p in model.parameters():
            p.assign(np.zeros(p.shape))
        result = model.forward(tiny_dataset.graph, Tensor(tiny_dataset.features.values))
        summary = attention_summary(result.attention)
        assert summary.shape == (2, 3)
        assert np.all(summary == 0.5)

    def test_flat_average(self, rng):
        layers = [{k: Tensor(rng.uniform(size=(5, 2))) for k in (1, 2)} for _ in range(3)]
        summary = attention_summary(layers)
        for i, layer in enumerate(layers):
            for j, k in enumerate((1, 2)):
                flat = [v for row in layer[k].values for v in row]
                assert summary[i, j] == pytest.approx(sum(flat) / len(flat))

    def test_no_attention(self):
        with pytest.raises(AnalysisError):
            attention_summary([])


class TestReportWriters:
    def test_grid_csv_writes_inf(self, tmp_path):
        grid = StatisticGrid(["mean", "variance"], ["x0", "x1"], np.array([[0.5, math.inf], [1.0, 2.0]]))
        write_grid_csv(tmp_path / "fisher.csv", grid)
        rows = list(csv.reader((tmp_path / "fisher.csv").open()))
        assert rows[0] == ["statistic", "x0", "x1", "average"]
        assert rows[1] == ["mean", "0.5", "inf", "inf"]
        assert rows[2] == ["variance", "1.0", "2.0", "1.5"]

    def test_stats_csv(self, tmp_path, tiny_dataset):
        write_stats_csv(tmp_path / "stats.csv", tiny_dataset, [_kind("mean"), _kind("variance")])
        rows = list(csv.reader((tmp_path / "stats.csv").open()))
        assert rows[0] == ["node", "label", "mean", "variance"]
        assert len(rows) == 13

    def test_gamma_and_attention(self, tmp_path):
        write_gamma(tmp_path / "gamma.txt", {"mean": math.inf, "central:2": 0.25})
        assert (tmp_path / "gamma.txt").read_text() == "mean\tinf\ncentral:2\t0.25\n"
        write_attention_csv(tmp_path / "attention.csv", np.array([[0.5, 0.25]]))
        assert (tmp_path / "attention.csv").read_text() == "layer,order1,order2\n0,0.5,0.25\n"
