import math

import numpy as np
import pytest

from gripnet import autodiff as ad
from gripnet.autodiff import LabelAdjacency, Parameter, ShapeMismatch, Tape

from oracles import dense_mean_aggregate, finite_difference_gradients, max_relative_error


def make_param(rng, rows, cols, name="p"):
    return Parameter(rng.standard_normal((rows, cols)), name)


class TestForwardPrimitives:
    def test_relu(self):
        t = Tape()
        x = t.constant([[-1.0, 0.0, 2.0]])
        assert ad.relu(x).value.tolist() == [[0.0, 0.0, 2.0]]

    def test_sigmoid_known_value(self):
        t = Tape()
        out = ad.sigmoid(t.constant([[2.0]]))
        assert out.value[0, 0] == pytest.approx(0.8807970779778824, abs=1e-12)

    def test_softmax_uniform_on_zero_row(self):
        t = Tape()
        out = ad.softmax_rows(t.constant(np.zeros((1, 4))))
        assert np.allclose(out.value, 0.25)

    def test_softmax_rows_normalized_and_positive(self):
        rng = np.random.default_rng(3)
        for _ in range(25):
            t = Tape()
            x = t.constant(rng.standard_normal((5, 7)) * 10)
            p = ad.softmax_rows(x).value
            assert np.all(p > 0)
            assert np.max(np.abs(p.sum(axis=1) - 1.0)) < 1e-12

    def test_add_and_mul_shapes(self):
        t = Tape()
        a = t.constant(np.ones((2, 3)))
        b = t.constant(np.ones((2, 2)))
        with pytest.raises(ShapeMismatch, match=r"\(2, 3\).*\(2, 2\)"):
            ad.add(a, b)
        with pytest.raises(ShapeMismatch, match=r"\(2, 3\).*\(2, 2\)"):
            ad.mul(a, b)

    def test_matmul_shape_error_names_both(self):
        t = Tape()
        a = t.constant(np.ones((2, 3)))
        b = t.constant(np.ones((2, 3)))
        with pytest.raises(ShapeMismatch, match=r"\(2, 3\) @ \(2, 3\)"):
            ad.matmul(a, b)

    def test_concat_then_split_recovers_operands(self):
        rng = np.random.default_rng(11)
        a_val = rng.standard_normal((4, 3))
        b_val = rng.standard_normal((4, 2))
        t = Tape()
        out = ad.concat_cols(t.constant(a_val), t.constant(b_val))
        assert np.array_equal(out.value[:, :3], a_val)
        assert np.array_equal(out.value[:, 3:], b_val)


class TestSpmmMean:
    def test_two_neighbor_mean(self):
        adj = LabelAdjacency.from_edges("l", [(1, 0), (2, 0)], num_targets=3)
        t = Tape()
        x = t.constant([[9.0, 9.0], [1.0, 0.0], [3.0, 2.0]])
        out = ad.spmm_mean(adj, x)
        assert out.value[0].tolist() == [2.0, 1.0]

    def test_empty_neighborhood_is_zero_row(self):
        adj = LabelAdjacency.from_edges("l", [(0, 1)], num_targets=2)
        t = Tape()
        out = ad.spmm_mean(adj, t.constant(np.ones((2, 3))))
        assert out.value[0].tolist() == [0.0, 0.0, 0.0]
        assert out.value[1].tolist() == [1.0, 1.0, 1.0]

    def test_matches_dense_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(2, 7))
            pairs = [
                (int(rng.integers(n)), int(rng.integers(n)))
                for _ in range(int(rng.integers(0, 12)))
            ]
            pairs = sorted(set(pairs))
            x_val = rng.standard_normal((n, int(rng.integers(1, 4))))
            adj = LabelAdjacency.from_edges("l", pairs, num_targets=n)
            t = Tape()
            out = ad.spmm_mean(adj, t.constant(x_val))
            expected = dense_mean_aggregate(pairs, n, n, x_val)
            assert np.max(np.abs(out.value - expected)) < 1e-12

    def test_row_count_checked(self):
        adj = LabelAdjacency.from_edges("l", [(0, 1)], num_targets=2)
        t = Tape()
        with pytest.raises(ShapeMismatch, match="source rows"):
            ad.spmm_mean(adj, t.constant(np.ones((3, 2))))

    def test_out_of_range_neighbor_rejected(self):
        with pytest.raises(IndexError):
            LabelAdjacency.from_edges("l", [(5, 0)], num_targets=3)

    def test_neighbor_lists_sorted(self):
        adj = LabelAdjacency.from_edges("l", [(2, 0), (1, 0)], num_targets=3)
        assert adj.neighbor_lists[0].tolist() == [1, 2]


class TestBackward:
    def test_linear_map_gradient_is_input(self):
        rng = np.random.default_rng(0)
        w = make_param(rng, 2, 3, "w")
        x_val = rng.standard_normal((3, 1))
        t = Tape()
        loss = ad.sum_all(ad.matmul(t.parameter(w), t.constant(x_val)))
        t.backward(loss)
        # d/dW sum(W x) has x broadcast along rows
        assert np.allclose(w.grad, np.tile(x_val.T, (2, 1)))

    def test_unused_parameter_keeps_zero_grad(self):
        rng = np.random.default_rng(1)
        used = make_param(rng, 2, 2, "used")
        unused = make_param(rng, 2, 2, "unused")
        t = Tape()
        t.parameter(unused)
        loss = ad.sum_all(t.parameter(used))
        t.backward(loss)
        assert np.all(unused.grad == 0)
        assert np.all(used.grad == 1)

    def test_loss_must_be_scalar(self):
        t = Tape()
        x = t.constant(np.ones((2, 2)))
        with pytest.raises(ShapeMismatch, match="1x1"):
            t.backward(ad.relu(x))

    def test_gradient_accumulates_over_reuse(self):
        rng = np.random.default_rng(2)
        w = make_param(rng, 2, 2, "w")
        t = Tape()
        node = t.parameter(w)
        loss = ad.sum_all(ad.add(node, node))
        t.backward(loss)
        assert np.all(w.grad == 2.0)

    def test_three_layer_composition_matches_finite_differences(self):
        # h = 1e-6 on a smooth-enough random three-layer stack
        rng = np.random.default_rng(12)
        w1 = make_param(rng, 4, 5, "w1")
        w2 = make_param(rng, 5, 3, "w2")
        w3 = make_param(rng, 3, 2, "w3")
        x_val = rng.standard_normal((6, 4))
        d_val = rng.standard_normal((1, 2))

        def forward() -> float:
            t = Tape()
            h1 = ad.relu(ad.matmul(t.constant(x_val), t.parameter(w1)))
            h2 = ad.sigmoid(ad.matmul(h1, t.parameter(w2)))
            h3 = ad.mul(ad.matmul(h2, t.parameter(w3)), t.constant(d_val))
            return ad.sum_all(ad.log(ad.add_scalar(ad.sigmoid(h3), 1.0)))

        loss = forward()
        loss.tape.backward(loss)
        analytic = [w1.grad.copy(), w2.grad.copy(), w3.grad.copy()]
        for p in (w1, w2, w3):
            p.zero_grad()
        numeric = finite_difference_gradients(
            lambda: float(forward().value[0, 0]), [w1, w2, w3], h=1e-6
        )
        assert max_relative_error(analytic, numeric) < 1e-5


def depth5_compositions(rng):
    """Random compositions (up to depth 5) mixing every primitive."""
    n = int(rng.integers(2, 5))
    d = int(rng.integers(2, 4))
    w_a = make_param(rng, d, d, "a")
    w_b = make_param(rng, 2 * d, d, "b")
    w_c = make_param(rng, 1, d, "c")
    x_val = rng.standard_normal((n, d))
    pairs = sorted(
        {(int(rng.integers(n)), int(rng.integers(n))) for _ in range(n)}
    )
    adj = LabelAdjacency.from_edges("l", pairs, num_targets=n)
    rows = np.array([int(rng.integers(n)) for _ in range(3)])
    cols = np.array([int(rng.integers(d)) for _ in range(3)])

    def forward() -> float:
        t = Tape()
        x = t.constant(x_val)
        h1 = ad.relu(ad.matmul(x, t.parameter(w_a)))
        h2 = ad.spmm_mean(adj, h1)
        h3 = ad.sigmoid(ad.matmul(ad.concat_cols(h1, h2), t.parameter(w_b)))
        hm = ad.mul(h3, t.parameter(w_c))
        h4 = ad.softmax_rows(ad.add(hm, ad.scale(h3, 0.5)))
        h5 = ad.clip(ad.gather_rows(h4, rows), 1e-12, None)
        picked = ad.select_entries(ad.log(h5), np.arange(3), cols)
        return ad.scale(ad.sum_all(ad.add_scalar(picked, 2.0)), -1.0)

    return forward, [w_a, w_b, w_c]


class TestGradientCheckProperty:
    @pytest.mark.parametrize("trial", range(10))
    def test_random_composed_graphs(self, trial):
        rng = np.random.default_rng(100 + trial)
        forward, params = depth5_compositions(rng)
        loss = forward()
        loss.tape.backward(loss)
        analytic = [p.grad.copy() for p in params]
        for p in params:
            p.zero_grad()
        numeric = finite_difference_gradients(
            lambda: float(forward().value[0, 0]), params, h=1e-6
        )
        assert max_relative_error(analytic, numeric) < 1e-5


class TestTapeHygiene:
    def test_cross_tape_operands_rejected(self):
        t1, t2 = Tape(), Tape()
        a = t1.constant(np.ones((1, 1)))
        b = t2.constant(np.ones((1, 1)))
        with pytest.raises(ValueError, match="different tapes"):
            ad.add(a, b)

    def test_backward_requires_same_tape(self):
        t1, t2 = Tape(), Tape()
        a = t1.constant(np.ones((1, 1)))
        with pytest.raises(ValueError, match="not produced"):
            t2.backward(a)
