"""Unit tests for the network layers, forward pass and loss."""

import numpy as np
import pytest

from services.layers import LayerSpec, MaxPool2x2
from services.network import backward, check_architecture, forward, init_network, loss, one_hot
from utils.errors import BadArchitecture, ShapeMismatch


class TestInitNetwork:
    """Tests for init_network()."""

    def test_default_architecture_k16(self):
        net = init_network(16)
        kinds = [spec.kind for spec in net.specs]
        assert kinds.count("conv3x3") == 4
        assert kinds.count("maxpool2x2") == 2
        assert net.n_classes == 3
        assert net.scheme == "multiclass"

    def test_same_seed_same_parameters(self, tiny_arch):
        a = init_network(8, arch=tiny_arch, seed=4)
        b = init_network(8, arch=tiny_arch, seed=4)
        for p, q in zip(a.parameters(), b.parameters()):
            assert np.array_equal(p, q)

    def test_k_too_small(self):
        with pytest.raises(BadArchitecture):
            init_network(3)

    def test_pooling_to_zero(self):
        arch = [{"kind": "maxpool2x2"}] * 3 + [{"kind": "flatten"}, {"kind": "output"}]
        with pytest.raises(BadArchitecture):
            init_network(4, arch=arch)

    def test_dense_without_flatten(self):
        arch = [{"kind": "conv3x3", "units": 2, "activation": "relu"}, {"kind": "dense", "units": 3}]
        with pytest.raises(BadArchitecture):
            init_network(8, arch=arch + [{"kind": "output"}])

    def test_missing_output(self):
        with pytest.raises(BadArchitecture):
            init_network(8, arch=[{"kind": "flatten"}])

    def test_binary_schemes(self, tiny_arch):
        assert init_network(8, 2, arch=tiny_arch).scheme == "direction"
        assert init_network(8, 2, arch=tiny_arch, scheme="dependence").scheme == "dependence"
        with pytest.raises(BadArchitecture):
            init_network(8, 3, arch=tiny_arch, scheme="direction")

    def test_layer_spec_round_trip(self):
        spec = LayerSpec("dense", 12, "relu")
        assert LayerSpec.from_dict(spec.to_dict()) == spec
        assert LayerSpec.from_dict({"kind": "flatten"}).to_dict() == {"kind": "flatten"}

    @pytest.mark.parametrize(
        "data",
        [
            {"kind": "dense", "unitz": 4},
            {"units": 4},
            {"kind": "dense", "units": 2.5},
            {"kind": "dense", "units": True},
            {"kind": "dense", "units": 4, "activation": None},
        ],
    )
    def test_layer_spec_rejects_bad_descriptions(self, data):
        with pytest.raises(BadArchitecture):
            LayerSpec.from_dict(data)

    def test_check_architecture_walks_shapes(self, tiny_arch):
        walked = check_architecture(8, tiny_arch)
        assert [shape for _, shape in walked] == [(1, 8, 8), (4, 8, 8), (4, 4, 4), (64,), (8,)]
        with pytest.raises(BadArchitecture):
            check_architecture(3, tiny_arch)


class TestForward:
    """Tests for forward()."""

    def test_rows_sum_to_one_float32(self, rng):
        net = init_network(16, seed=1, dtype=np.float32)
        probs = forward(net, rng.uniform(size=(5, 16, 16)))
        assert probs.shape == (5, 3)
        assert np.all(np.abs(probs.sum(axis=1) - 1.0) < 1e-6)
        assert np.all(probs >= 0)

    def test_binary_head(self, rng, tiny_arch):
        net = init_network(8, 2, arch=tiny_arch, seed=2)
        probs = forward(net, rng.uniform(size=(4, 8, 8)))
        assert probs.shape == (4, 2)
        assert np.allclose(probs.sum(axis=1), 1.0)

    def test_accepts_channel_axis(self, rng, tiny_net):
        batch = rng.uniform(size=(2, 8, 8))
        assert np.array_equal(forward(tiny_net, batch), forward(tiny_net, batch[:, None]))

    def test_wrong_k(self, rng, tiny_net):
        with pytest.raises(ShapeMismatch):
            forward(tiny_net, rng.uniform(size=(2, 16, 16)))

    def test_zero_input_gives_uniform_softmax(self, tiny_net):
        # Zero input with zero biases leaves every logit at zero.
        probs = forward(tiny_net, np.zeros((1, 8, 8)))
        assert np.allclose(probs, 1.0 / 3.0)

    def test_forward_is_bit_exact(self, rng, tiny_arch):
        batch = rng.uniform(size=(5, 8, 8))
        a = init_network(8, arch=tiny_arch, seed=11)
        b = init_network(8, arch=tiny_arch, seed=11)
        first = forward(a, batch)
        assert np.array_equal(first, forward(a, batch))
        assert np.array_equal(first, forward(b, batch))


class TestMaxPool:
    """Tests for MaxPool2x2 routing."""

    def test_gradient_goes_to_argmax(self):
        pool = MaxPool2x2()
        x = np.array([[[[1.0, 5.0], [3.0, 2.0]]]])
        assert pool.forward(x).item() == 5.0
        dx = pool.backward(np.ones((1, 1, 1, 1)))
        assert dx.tolist() == [[[[0.0, 1.0], [0.0, 0.0]]]]


class TestLoss:
    """Tests for loss()."""

    def test_perfect_prediction(self):
        assert loss(np.array([[1.0, 0.0, 0.0]]), one_hot([0], 3)) == pytest.approx(0.0, abs=1e-15)

    def test_uniform_prediction(self):
        probs = np.full((2, 3), 1.0 / 3.0)
        assert loss(probs, one_hot([0, 2], 3)) == pytest.approx(np.log(3.0))

    def test_floor_keeps_loss_finite(self):
        value = loss(np.array([[0.0, 1.0]]), one_hot([0], 2))
        assert value == pytest.approx(-np.log(1e-12))

    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatch):
            loss(np.ones((2, 3)) / 3, one_hot([0], 3))


class TestBackward:
    """Tests for backward()."""

    def test_one_gradient_per_parameter(self, rng, tiny_net):
        grads = backward(tiny_net, rng.uniform(size=(3, 8, 8)), one_hot([0, 1, 2], 3))
        params = tiny_net.parameters()
        assert len(grads) == len(params)
        for g, p in zip(grads, params):
            assert g.shape == p.shape

    def test_set_parameters_validates_shapes(self, tiny_net):
        values = tiny_net.snapshot()
        values[0] = np.zeros((1, 1))
        with pytest.raises(ShapeMismatch):
            tiny_net.set_parameters(values)

    def test_snapshot_is_a_copy(self, tiny_net):
        saved = tiny_net.snapshot()
        tiny_net.parameters()[0][...] = 0.0
        tiny_net.set_parameters(saved)
        assert np.array_equal(tiny_net.parameters()[0], saved[0])
        assert np.any(saved[0] != 0)

    def test_duplicated_batch_gives_same_gradients(self, rng, tiny_net):
        batch = rng.uniform(size=(3, 8, 8))
        targets = one_hot([0, 1, 2], 3)
        single = backward(tiny_net, batch, targets)
        doubled = backward(
            tiny_net, np.concatenate([batch, batch]), np.concatenate([targets, targets])
        )
        for a, b in zip(single, doubled):
            assert np.allclose(a, b, rtol=1e-12, atol=1e-15)

    def test_zero_input_gives_zero_conv_weight_gradient(self, tiny_net):
        grads = backward(tiny_net, np.zeros((4, 8, 8)), one_hot([0, 1, 2, 0], 3))
        assert tiny_net.specs[0].kind == "conv3x3"
        assert np.all(grads[0] == 0.0)
