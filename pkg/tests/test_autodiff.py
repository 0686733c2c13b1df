"""Tests for the tape, the differentiable ops, gradient checking and checkpoints."""

import math

import numpy as np
import pytest

from mmgnn.autodiff import (
    CheckpointError,
    NonFiniteError,
    Parameter,
    ShapeError,
    Tape,
    Tensor,
    current_tape,
    grad_check,
    load_into,
    read_checkpoint,
    save_checkpoint,
)
from mmgnn.autodiff import ops
from mmgnn.graph import LabelVector, SplitMask, random_graph
from mmgnn.models import SplitRole


def _param(rng, rows, cols, name="w", low=-1.0, high=1.0):
    return Parameter(rng.uniform(low, high, size=(rows, cols)), name)


class TestTape:
    def test_untracked_without_tape(self, rng):
        w = _param(rng, 2, 2)
        out = ops.matmul(Tensor(np.eye(2)), w)
        assert out.tape_id is None

    def test_constants_are_not_recorded(self):
        with Tape() as tape:
            ops.add(Tensor(np.ones((2, 2))), Tensor(np.ones((2, 2))))
        assert len(tape) == 0

    def test_gradients_accumulate_until_zeroed(self):
        w = Parameter(np.array([[1.0, 2.0]]), "w")
        for _ in range(2):
            with Tape() as tape:
                loss = ops.sum_all(w)
            tape.backward(loss)
        assert w.grad.tolist() == [[2.0, 2.0]]
        w.zero_grad()
        assert w.grad.tolist() == [[0.0, 0.0]]

    def test_shared_parameter_sums_contributions(self):
        w = Parameter(np.array([[3.0]]), "w")
        with Tape() as tape:
            loss = ops.sum_all(ops.mul_elem(w, w))
        tape.backward(loss)
        assert w.grad[0, 0] == pytest.approx(6.0)

    def test_nested_tapes_restore(self):
        with Tape() as outer:
            with Tape() as inner:
                assert current_tape() is inner
            assert current_tape() is outer
        assert current_tape() is None

    def test_backward_needs_scalar(self, rng):
        w = _param(rng, 2, 2)
        with Tape() as tape:
            out = ops.scale(w, 2.0)
        with pytest.raises(ShapeError):
            tape.backward(out)

    def test_non_finite_raises(self):
        w = Parameter(np.array([[1e200]]), "w")
        with Tape():
            with pytest.raises(NonFiniteError, match="pow_elem"):
                ops.pow_elem(w, 2)

    def test_tensors_are_two_dimensional(self):
        with pytest.raises(ShapeError):
            Tensor(np.zeros(3))
        assert Tensor(np.float64(2.0)).item() == 2.0


class TestForwardValues:
    def test_spmm_mean_path(self, path_graph):
        out = ops.spmm_mean(path_graph, Tensor(np.array([[1.0], [2.0], [3.0]])))
        assert out.values.tolist() == [[2.0], [2.0], [2.0]]

    def test_spmm_mean_isolated_row(self, two_neighbor_graph):
        h = Tensor(np.array([[9.0], [1.0], [3.0], [5.0]]))
        out = ops.spmm_mean(two_neighbor_graph, h).values
        assert out[0, 0] == 2.0
        assert out[3, 0] == 0.0

    def test_spmm_row_mismatch(self, path_graph):
        with pytest.raises(ShapeError):
            ops.spmm_mean(path_graph, Tensor(np.ones((4, 1))))

    def test_segment_max(self, two_neighbor_graph):
        h = Tensor(np.array([[9.0], [1.0], [3.0], [5.0]]))
        assert ops.segment_max(two_neighbor_graph, h).values[:, 0].tolist() == [3.0, 9.0, 9.0, 0.0]

    @pytest.mark.parametrize(
        "x, k, expected",
        [(8.0, 3, 2.0), (-8.0, 3, -2.0), (0.5, 2, 0.70711), (0.0, 2, 0.0), (-1.5, 1, -1.5)],
    )
    def test_signed_root(self, x, k, expected):
        out = ops.signed_root(Tensor(np.array([[x]])), k, eps=0.0).item()
        assert out == pytest.approx(expected, abs=1e-5)

    def test_signed_root_slope_finite_at_zero(self):
        x = Parameter(np.zeros((1, 1)), "x")
        with Tape() as tape:
            loss = ops.sum_all(ops.signed_root(x, 3, eps=1e-6))
        tape.backward(loss)
        assert x.grad[0, 0] == pytest.approx(1e-6 ** (-1.0 / 3.0), rel=1e-9)

    def test_cross_entropy_uniform_logits(self):
        labels = LabelVector.from_array(np.arange(7))
        loss = ops.softmax_cross_entropy(Tensor(np.zeros((7, 7))), labels)
        assert loss.item() == pytest.approx(math.log(7))

    def test_cross_entropy_masked(self):
        labels = LabelVector.from_array(np.array([0, 1, 0, 1]))
        mask = SplitMask.from_roles([SplitRole.TRAIN, SplitRole.VAL, SplitRole.TEST, SplitRole.TRAIN])
        logits = Tensor(np.array([[10.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 10.0]]))
        loss = ops.softmax_cross_entropy(logits, labels, mask, SplitRole.TRAIN).item()
        assert loss == pytest.approx(math.log1p(math.exp(-10.0)))

    def test_grouped_softmax_sums_to_one(self, rng):
        out = ops.grouped_softmax(Tensor(rng.normal(size=(4, 6))), 3).values.reshape(4, 3, 2)
        assert np.allclose(out.sum(axis=1), 1.0)

    def test_dropout_identity_without_rng(self, rng):
        t = Tensor(rng.normal(size=(3, 3)))
        assert ops.dropout(t, 0.5, None) is t

    def test_matmul_shape_error(self):
        with pytest.raises(ShapeError, match="inner"):
            ops.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))


class TestGradients:
    def test_linear_sum(self, rng):
        w = _param(rng, 3, 4)
        assert grad_check(lambda: ops.sum_all(w), [w]) < 1e-8

    def test_matmul_and_bias(self, rng):
        x = Tensor(rng.normal(size=(5, 3)))
        w, b = _param(rng, 3, 2, "w"), _param(rng, 1, 2, "b")
        f = lambda: ops.sum_all(ops.pow_elem(ops.add(ops.matmul(x, w), b), 2))
        assert grad_check(f, [w, b], eps=1e-5) < 1e-4

    def test_sparse_aggregations(self, rng):
        g = random_graph(8, 20, seed=2)
        h = _param(rng, 8, 3)
        f = lambda: ops.sum_all(
            ops.pow_elem(ops.sub(ops.gather_neighbors(g, h), ops.gather_centers(g, ops.spmm_mean(g, h))), 3)
        )
        assert grad_check(f, [h], eps=1e-5) < 1e-4
        f = lambda: ops.sum_all(ops.sigmoid(ops.edge_mean(g, ops.gather_neighbors(g, ops.spmm_sum(g, h)))))
        assert grad_check(f, [h], eps=1e-5) < 1e-4

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_signed_root(self, rng, k):
        magnitude = rng.uniform(0.5, 2.0, size=(4, 3))
        x = Parameter(magnitude * rng.choice([-1.0, 1.0], size=(4, 3)), "x")
        assert grad_check(lambda: ops.sum_all(ops.signed_root(x, k, 1e-6)), [x], eps=1e-5) < 1e-4

    def test_segment_max_distinct_values(self, rng):
        g = random_graph(6, 14, seed=5)
        h = Parameter(rng.permutation(18).reshape(6, 3).astype(np.float64), "h")
        assert grad_check(lambda: ops.sum_all(ops.segment_max(g, h)), [h], eps=1e-5) < 1e-4

    def test_shape_ops_and_softmax(self, rng):
        a, b = _param(rng, 3, 2, "a"), _param(rng, 3, 4, "b")

        def f():
            joined = ops.concat_cols([a, b])
            soft = ops.grouped_softmax(joined, 3)
            return ops.sum_all(ops.mul_elem(ops.slice_cols(soft, 2, 4), ops.slice_cols(joined, 0, 2)))

        assert grad_check(f, [a, b], eps=1e-5) < 1e-4

    def test_cross_entropy(self, rng):
        labels = LabelVector.from_array(np.array([0, 1, 2, 1, 0]))
        z = _param(rng, 5, 3, "z")
        assert grad_check(lambda: ops.softmax_cross_entropy(z, labels), [z], eps=1e-5) < 1e-4

    def test_relu_away_from_kink(self, rng):
        x = Parameter(rng.uniform(0.2, 1.0, size=(3, 3)) * rng.choice([-1.0, 1.0], size=(3, 3)), "x")
        assert grad_check(lambda: ops.sum_all(ops.pow_elem(ops.relu(x), 2)), [x], eps=1e-5) < 1e-4


class TestCheckpoint:
    def test_round_trip_exact(self, tmp_path, rng):
        params = [_param(rng, 3, 2, "a"), _param(rng, 1, 4, "b")]
        save_checkpoint(tmp_path / "m.ckpt", params, {"hidden": 4})
        config, arrays = read_checkpoint(tmp_path / "m.ckpt")
        assert config == {"hidden": 4}
        assert list(arrays) == ["a", "b"]
        assert np.array_equal(arrays["a"], params[0].values)

        fresh = [Parameter(np.zeros((3, 2)), "a"), Parameter(np.zeros((1, 4)), "b")]
        load_into(fresh, arrays)
        assert np.array_equal(fresh[1].values, params[1].values)

    def test_missing_parameter(self, rng):
        with pytest.raises(CheckpointError, match="missing"):
            load_into([_param(rng, 1, 1, "a"), _param(rng, 1, 1, "b")], {"a": np.zeros((1, 1))})

    def test_shape_mismatch(self, rng):
        with pytest.raises(CheckpointError, match="shape"):
            load_into([_param(rng, 2, 2, "a")], {"a": np.zeros((1, 2))})

    def test_truncated_body(self, tmp_path):
        (tmp_path / "bad.ckpt").write_text("a 2 2\n1 2 3\n")
        with pytest.raises(CheckpointError, match="3 values"):
            read_checkpoint(tmp_path / "bad.ckpt")

    def test_not_found(self, tmp_path):
        with pytest.raises(CheckpointError, match="not found"):
            read_checkpoint(tmp_path / "none.ckpt")
