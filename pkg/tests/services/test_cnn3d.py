import numpy as np
import pytest

from app.errors import ArgumentError, StateError
from app.schemas.config import HeadKind, NetConfig, QLayerSettings
from app.services.cnn3d import ClassicalHead, ResidualBlock, ResNet3D, net_backward, net_forward, residual_block
from app.services.model import QResNet
from app.services.optimizer import bce_grad, bce_loss
from tests.conftest import tensor_difference


def pcg(seed):
    return np.random.Generator(np.random.PCG64(seed))


def assert_gradients_match(model_params, loss):
    for name, tensor in model_params:
        if not tensor.trainable:
            continue
        analytic = tensor.grad.copy()
        numeric = tensor_difference(loss, tensor)
        assert np.allclose(analytic, numeric, rtol=1e-4, atol=1e-6), name


def test_zero_main_path_gives_relu_of_input(rng):
    block = ResidualBlock(2, 2, 1, rng)
    for conv in (block.conv1, block.conv2):
        conv.weight.data[...] = 0.0
    x = rng.standard_normal((2, 2, 4, 4, 4))
    assert np.array_equal(residual_block(x, block, "train"), np.maximum(x, 0.0))


def test_stride_two_block_halves_spatial_side(rng):
    block = ResidualBlock(2, 4, 2, rng)
    out = residual_block(rng.standard_normal((2, 2, 4, 4, 4)), block, "train")
    assert out.shape == (2, 4, 2, 2, 2)
    assert block.shortcut is not None


@pytest.mark.parametrize("stride, c_out", [(1, 2), (2, 3)])
def test_residual_block_gradients_match_finite_differences(rng, stride, c_out):
    block = ResidualBlock(2, c_out, stride, rng)
    x = rng.standard_normal((2, 2, 4, 4, 4))
    probe = rng.standard_normal((2, c_out, *(4 // stride,) * 3))

    def loss():
        return float(np.sum(block.forward(x, "train") * probe))

    for _, tensor in block.named_parameters("block"):
        tensor.zero_grad()
    block.forward(x, "train")
    block.backward(probe)
    assert_gradients_match(block.named_parameters("block"), loss)


def tiny_net_config(side=4, n_out=2):
    return NetConfig(input_side=side, channels=[2], blocks_per_stage=1, n_out=n_out)


def test_zero_dense_layer_gives_half(rng):
    net = ResNet3D(tiny_net_config(), rng)
    net.dense_weight.data[...] = 0.0
    features = net_forward(np.zeros((3, 1, 4, 4, 4)), net, "eval")
    assert np.array_equal(features, np.full((3, 2), 0.5))


def test_features_lie_in_open_unit_interval(rng):
    net = ResNet3D(NetConfig(input_side=8, channels=[2, 3], n_out=4), rng)
    features = net_forward(rng.uniform(0, 1, (2, 1, 8, 8, 8)), net, "train")
    assert features.shape == (2, 4)
    assert np.all((features > 0) & (features < 1))


def test_forward_is_deterministic_for_fixed_seed(rng):
    x = rng.uniform(0, 1, (2, 1, 4, 4, 4))
    a = net_forward(x, ResNet3D(tiny_net_config(), pcg(5)), "eval")
    b = net_forward(x, ResNet3D(tiny_net_config(), pcg(5)), "eval")
    assert np.array_equal(a, b)


def test_forward_rejects_wrong_input_shape(rng):
    net = ResNet3D(tiny_net_config(), rng)
    with pytest.raises(ArgumentError):
        net_forward(np.zeros((1, 1, 8, 8, 8)), net)


def test_backward_before_forward_raises(rng):
    with pytest.raises(StateError):
        net_backward(np.zeros((1, 2)), ResNet3D(tiny_net_config(), rng))
    with pytest.raises(StateError):
        ClassicalHead(2, rng).backward(np.zeros(1))


def test_zero_upstream_gradient_gives_zero_gradients(rng):
    net = ResNet3D(tiny_net_config(), rng)
    net_forward(rng.uniform(0, 1, (2, 1, 4, 4, 4)), net, "train")
    net_backward(np.zeros((2, 2)), net)
    for name, tensor in net.named_parameters():
        if tensor.trainable:
            assert not np.any(tensor.grad), name


def test_single_sample_net_gradients_match_finite_differences(rng):
    net = ResNet3D(tiny_net_config(), rng)
    x = rng.uniform(0, 1, (1, 1, 4, 4, 4))
    probe = rng.standard_normal((1, 2))

    net_forward(x, net, "eval")
    net_backward(probe, net)
    assert_gradients_match(
        net.named_parameters(), lambda: float(np.sum(net_forward(x, net, "eval") * probe))
    )


def test_batch_gradient_is_sum_of_sample_gradients(rng):
    net = ResNet3D(tiny_net_config(), rng)
    x = rng.uniform(0, 1, (3, 1, 4, 4, 4))
    probe = rng.standard_normal((3, 2))
    trainable = [t for _, t in net.named_parameters() if t.trainable]

    net_forward(x, net, "eval")
    net_backward(probe, net)
    batch = [t.grad.copy() for t in trainable]

    for t in trainable:
        t.zero_grad()
    for n in range(3):
        net_forward(x[n : n + 1], net, "eval")
        net_backward(probe[n : n + 1], net)
    for b, t in zip(batch, trainable):
        assert np.allclose(b, t.grad, atol=1e-10)


@pytest.mark.parametrize("head", [HeadKind.quantum, HeadKind.classical])
def test_hybrid_pipeline_gradients_match_finite_differences(head):
    model = QResNet(
        NetConfig(input_side=8, channels=[2], blocks_per_stage=1, n_out=2),
        QLayerSettings(n_qubits=2, fm_reps=1, ansatz_reps=1),
        head,
        seed=21,
    )
    x = pcg(22).uniform(0, 1, (1, 1, 8, 8, 8))
    y = np.array([1.0])

    def loss():
        return float(bce_loss(model.forward(x, "eval"), y)[0])

    model.zero_grad()
    p = model.forward(x, "eval")
    model.backward(bce_grad(p, y))
    assert_gradients_match(model.named_parameters(), loss)


def test_classical_head_is_dense_plus_sigmoid(rng):
    head = ClassicalHead(3, rng)
    features = rng.uniform(0, 1, (4, 3))
    expected = 1.0 / (1.0 + np.exp(-(features @ head.weight.data[0] + head.bias.data[0])))
    assert np.allclose(head.forward(features), expected, atol=1e-15)


def test_random_training_steps_stay_finite(rng):
    model = QResNet(tiny_net_config(n_out=2), QLayerSettings(n_qubits=2, fm_reps=1), HeadKind.quantum, seed=4)
    for _ in range(100):
        x = rng.uniform(0, 1, (2, 1, 4, 4, 4))
        y = rng.integers(0, 2, size=2).astype(float)
        model.zero_grad()
        p = model.forward(x, "train")
        model.backward(bce_grad(p, y) / 2)
        for name, tensor in model.named_parameters():
            assert np.all(np.isfinite(tensor.data)), name
            if tensor.trainable:
                assert np.all(np.isfinite(tensor.grad)), name
                tensor.data -= 0.01 * tensor.grad
