"""Network shape, weight grouping, forward pass, and gradient contracts."""

import math

import numpy as np
import pytest

from optionbnn.mlp import (
    FeatureVector,
    NetworkLayout,
    NetworkWeights,
    ard_groups,
    data_error,
    data_error_and_gradient,
    data_error_gradient,
    forward,
    init_weights,
    output_weight_gradient,
)


def count_connections(n_inputs: int, n_hidden: int) -> int:
    """Independent enumeration of every connection and bias."""
    count = 0
    for _ in range(n_inputs):
        for _ in range(n_hidden):
            count += 1
    count += n_hidden  # hidden biases
    count += n_hidden  # hidden -> output
    count += 1  # output bias
    return count


class TestLayout:
    def test_paper_sized_network_has_126_weights(self):
        layout = NetworkLayout(3, 25)
        assert layout.n_weights == 126
        assert layout.n_weights == count_connections(3, 25)

    @pytest.mark.parametrize("ni", range(1, 7))
    @pytest.mark.parametrize("nh", range(1, 8))
    def test_weight_count_formula(self, ni, nh):
        layout = NetworkLayout(ni, nh)
        assert layout.n_weights == (ni + 1) * nh + (nh + 1)
        assert layout.n_weights == count_connections(ni, nh)

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            NetworkLayout(0, 5)
        with pytest.raises(ValueError):
            NetworkLayout(3, 0)
        with pytest.raises(ValueError):
            NetworkLayout(3, 5, n_outputs=2)
        with pytest.raises(ValueError):
            NetworkLayout(3, 5, hidden_activation="relu")


class TestGroups:
    @pytest.mark.parametrize("ni,nh", [(1, 1), (3, 25), (4, 8), (6, 2)])
    def test_partition_covers_every_index_once(self, ni, nh):
        layout = NetworkLayout(ni, nh)
        groups = ard_groups(layout)
        assert len(groups) == ni + 2
        flat = np.sort(np.concatenate(groups))
        assert np.array_equal(flat, np.arange(layout.n_weights))
        sizes = [len(g) for g in groups]
        assert sizes == [nh] * ni + [2 * nh, 1]

    def test_rejects_non_partition(self):
        layout = NetworkLayout(1, 1)
        with pytest.raises(ValueError):
            NetworkWeights(layout, np.zeros(4), groups=(np.array([0, 1]), np.array([1, 2, 3])))
        with pytest.raises(ValueError):
            NetworkWeights(layout, np.zeros(4), groups=(np.array([0, 1, 2]),))
        with pytest.raises(ValueError):
            NetworkWeights(layout, np.zeros(4), groups=(np.arange(4), np.array([], dtype=int)))

    def test_rejects_non_finite_values(self):
        layout = NetworkLayout(1, 1)
        with pytest.raises(ValueError):
            NetworkWeights(layout, np.array([0.0, np.nan, 0.0, 0.0]))


class TestInitWeights:
    def test_deterministic_given_seed(self):
        layout = NetworkLayout(3, 4)
        a = init_weights(layout, np.ones(5), seed=123)
        b = init_weights(layout, np.ones(5), seed=123)
        assert np.array_equal(a.values, b.values)
        c = init_weights(layout, np.ones(5), seed=124)
        assert not np.array_equal(a.values, c.values)

    def test_large_alpha_pins_group_near_zero(self):
        layout = NetworkLayout(3, 10)
        alphas = np.array([1e6, 1.0, 1.0, 1.0, 1.0])
        net = init_weights(layout, alphas, seed=0)
        group0 = net.groups[0]
        assert np.all(np.abs(net.values[group0]) < 0.01)

    def test_rejects_non_positive_alpha(self):
        layout = NetworkLayout(3, 4)
        with pytest.raises(ValueError):
            init_weights(layout, [1.0, 1.0, 0.0, 1.0, 1.0], seed=0)
        with pytest.raises(ValueError):
            init_weights(layout, [1.0, 1.0, -2.0, 1.0, 1.0], seed=0)

    def test_rejects_wrong_alpha_count(self):
        with pytest.raises(ValueError):
            init_weights(NetworkLayout(3, 4), np.ones(4), seed=0)


def reference_tanh(x: float) -> float:
    """Scalar tanh through exponentials, independent of numpy."""
    return (math.exp(x) - math.exp(-x)) / (math.exp(x) + math.exp(-x))


class TestForward:
    def test_all_zero_weights_give_zero_output(self):
        net = NetworkWeights(NetworkLayout(3, 5), np.zeros(NetworkLayout(3, 5).n_weights))
        assert forward(net, np.array([0.7, -1.3, 2.0])) == 0.0

    def test_dead_hidden_unit_passes_output_bias(self):
        # input->hidden 0, hidden bias 0, hidden->output w, output bias b
        layout = NetworkLayout(1, 1)
        net = NetworkWeights(layout, np.array([0.0, 0.0, 3.7, -1.25]))
        for x in (-4.0, 0.0, 11.5):
            assert forward(net, np.array([x])) == -1.25

    def test_tiny_network_matches_hand_evaluation(self):
        layout = NetworkLayout(1, 1)
        net = NetworkWeights(layout, np.array([1.0, 0.0, 2.0, 0.5]))
        expected = 2.0 * reference_tanh(0.5) + 0.5
        assert forward(net, np.array([0.5])) == pytest.approx(expected, rel=1e-12)

    def test_batch_matches_single(self):
        rng = np.random.default_rng(0)
        layout = NetworkLayout(3, 4)
        net = NetworkWeights(layout, rng.standard_normal(layout.n_weights))
        xs = rng.standard_normal((6, 3))
        batch = forward(net, xs)
        singles = np.array([forward(net, row) for row in xs])
        np.testing.assert_array_equal(batch, singles)

    def test_rejects_non_finite_input(self):
        net = NetworkWeights(NetworkLayout(2, 2), np.zeros(NetworkLayout(2, 2).n_weights))
        with pytest.raises(ValueError):
            forward(net, np.array([1.0, np.inf]))

    def test_rejects_wrong_width(self):
        net = NetworkWeights(NetworkLayout(2, 2), np.zeros(NetworkLayout(2, 2).n_weights))
        with pytest.raises(ValueError):
            forward(net, np.array([1.0, 2.0, 3.0]))


class TestDataError:
    def test_zero_when_fitting_exactly(self):
        rng = np.random.default_rng(1)
        layout = NetworkLayout(2, 3)
        net = NetworkWeights(layout, rng.standard_normal(layout.n_weights))
        x = rng.standard_normal((5, 2))
        y = forward(net, x)
        assert data_error(net, x, y) == 0.0

    def test_single_point_half_square(self):
        # prediction 2 (dead net, output bias 2), target 0 -> 0.5 * 4 = 2
        net = NetworkWeights(NetworkLayout(1, 1), np.array([0.0, 0.0, 0.0, 2.0]))
        assert data_error(net, np.array([[0.3]]), np.array([0.0])) == 2.0

    def test_matches_pointwise_accumulation(self):
        rng = np.random.default_rng(2)
        layout = NetworkLayout(2, 3)
        net = NetworkWeights(layout, rng.standard_normal(layout.n_weights))
        x = rng.standard_normal((3, 2))
        y = rng.standard_normal(3)
        total = 0.0
        for i in range(3):
            total += 0.5 * (forward(net, x[i]) - y[i]) ** 2
        assert data_error(net, x, y) == pytest.approx(total, rel=1e-14)

    def test_empty_dataset_rejected(self):
        net = NetworkWeights(NetworkLayout(2, 2), np.zeros(NetworkLayout(2, 2).n_weights))
        with pytest.raises(ValueError):
            data_error(net, np.empty((0, 2)), np.empty(0))


class TestDataErrorGradient:
    def test_zero_at_exact_fit(self):
        rng = np.random.default_rng(3)
        layout = NetworkLayout(3, 4)
        net = NetworkWeights(layout, rng.standard_normal(layout.n_weights))
        x = rng.standard_normal((6, 3))
        y = forward(net, x)
        assert np.array_equal(data_error_gradient(net, x, y), np.zeros(layout.n_weights))

    def test_matches_central_finite_differences(self):
        """Randomized small networks; the 1e-3 denominator floor guards the
        comparison against finite-difference roundoff on components whose
        magnitude is far below the error scale."""
        rng = np.random.default_rng(42)
        h = 1e-6
        for _ in range(30):
            ni = int(rng.integers(1, 5))
            nh = int(rng.integers(1, 6))
            n = int(rng.integers(1, 11))
            layout = NetworkLayout(ni, nh)
            net = NetworkWeights(layout, rng.standard_normal(layout.n_weights))
            x = rng.standard_normal((n, ni))
            y = rng.standard_normal(n)
            grad = data_error_gradient(net, x, y)
            for i in range(layout.n_weights):
                up, down = net.values.copy(), net.values.copy()
                up[i] += h
                down[i] -= h
                fd = (
                    data_error(net.with_values(up), x, y)
                    - data_error(net.with_values(down), x, y)
                ) / (2 * h)
                rel = abs(fd - grad[i]) / max(abs(fd), abs(grad[i]), 1e-3)
                assert rel <= 1e-5

    def test_doubling_residuals_doubles_gradient(self):
        rng = np.random.default_rng(4)
        layout = NetworkLayout(2, 3)
        net = NetworkWeights(layout, rng.standard_normal(layout.n_weights))
        x = rng.standard_normal((5, 2))
        y = rng.standard_normal(5)
        shifted = y - (forward(net, x) - y)  # residual r -> 2r
        g1 = data_error_gradient(net, x, y)
        g2 = data_error_gradient(net, x, shifted)
        np.testing.assert_allclose(g2, 2.0 * g1, rtol=1e-13)

    def test_fused_path_matches_separate_calls(self):
        rng = np.random.default_rng(5)
        layout = NetworkLayout(3, 3)
        net = NetworkWeights(layout, rng.standard_normal(layout.n_weights))
        x = rng.standard_normal((4, 3))
        y = rng.standard_normal(4)
        e, g = data_error_and_gradient(net, x, y)
        assert e == data_error(net, x, y)
        assert np.array_equal(g, data_error_gradient(net, x, y))


class TestOutputWeightGradient:
    def test_matches_finite_differences_of_forward(self):
        rng = np.random.default_rng(6)
        layout = NetworkLayout(3, 4)
        net = NetworkWeights(layout, rng.standard_normal(layout.n_weights))
        x = rng.standard_normal(3)
        g = output_weight_gradient(net, x)
        h = 1e-6
        for i in range(layout.n_weights):
            up, down = net.values.copy(), net.values.copy()
            up[i] += h
            down[i] -= h
            fd = (forward(net.with_values(up), x) - forward(net.with_values(down), x)) / (2 * h)
            assert abs(fd - g[i]) / max(abs(fd), abs(g[i]), 1e-3) <= 1e-5

    def test_batch_matches_single(self):
        rng = np.random.default_rng(7)
        layout = NetworkLayout(2, 3)
        net = NetworkWeights(layout, rng.standard_normal(layout.n_weights))
        xs = rng.standard_normal((4, 2))
        batch = output_weight_gradient(net, xs)
        for i, row in enumerate(xs):
            np.testing.assert_array_equal(batch[i], output_weight_gradient(net, row))


class TestFeatureVector:
    def test_valid_roundtrip(self):
        fv = FeatureVector(volatility=0.3, strike=95.0, maturity_days=120.0)
        np.testing.assert_array_equal(fv.as_array(), [0.3, 95.0, 120.0])

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(volatility=0.0, strike=95.0, maturity_days=10.0),
            dict(volatility=0.3, strike=-1.0, maturity_days=10.0),
            dict(volatility=0.3, strike=95.0, maturity_days=-0.5),
            dict(volatility=np.nan, strike=95.0, maturity_days=10.0),
        ],
    )
    def test_rejects_invalid(self, kwargs):
        with pytest.raises(ValueError):
            FeatureVector(**kwargs)
