import numpy as np
import pytest

from nnet.layers import conv3d, group_norm, linear, upsample2
from nnet.losses import soft_dice_loss
from nnet.tensor import Tensor, concat, parameter
from volume.errors import ShapeMismatch


def numeric_gradient(f, array, rng, samples=8, eps=1e-6):
    """Central differences of scalar ``f`` at a few random entries of ``array``."""
    picks = []
    for _ in range(samples):
        index = tuple(int(rng.integers(0, s)) for s in array.shape)
        saved = array[index]
        array[index] = saved + eps
        up = f()
        array[index] = saved - eps
        down = f()
        array[index] = saved
        picks.append((index, (up - down) / (2 * eps)))
    return picks


def check_gradients(build, tensors, rng):
    """``build()`` returns a tensor; compares its random projection's gradient for each input."""
    projection = rng.normal(size=build().shape)

    def value():
        return float((build().data * projection).sum())

    for t in tensors:
        t.zero_grad()
    (build() * projection).sum().backward()
    for t in tensors:
        for index, expected in numeric_gradient(value, t.data, rng):
            assert t.grad[index] == pytest.approx(expected, rel=1e-4, abs=1e-7)


def test_arithmetic_gradients(rng):
    a = parameter(rng.normal(size=(3, 4)), "a")
    b = parameter(rng.uniform(0.5, 2.0, size=(4,)), "b")
    check_gradients(lambda: ((a * b - a / b) ** 2).sigmoid() + a.leaky_relu(0.1), [a, b], rng)
    check_gradients(lambda: concat([a, a * 2.0], axis=0).exp().mean(axis=1, keepdims=True), [a], rng)


@pytest.mark.parametrize("stride", [1, 2])
def test_conv3d_gradients(rng, stride):
    x = parameter(rng.normal(size=(2, 2, 4, 4, 4)), "x")
    w = parameter(rng.normal(size=(3, 2, 3, 3, 3)), "w")
    b = parameter(rng.normal(size=(3,)), "b")
    check_gradients(lambda: conv3d(x, w, b, stride=stride), [x, w, b], rng)


def test_conv3d_matches_direct_sum(rng):
    x = rng.normal(size=(1, 1, 3, 3, 3))
    w = rng.normal(size=(1, 1, 3, 3, 3))
    out = conv3d(Tensor(x), Tensor(w)).data
    assert out.shape == (1, 1, 3, 3, 3)
    assert out[0, 0, 1, 1, 1] == pytest.approx(float((x * w).sum()))
    assert conv3d(Tensor(x), Tensor(w), stride=2).shape == (1, 1, 2, 2, 2)


def test_conv3d_rejects_mismatched_channels(rng):
    with pytest.raises(ShapeMismatch):
        conv3d(Tensor(rng.normal(size=(1, 2, 4, 4, 4))), Tensor(rng.normal(size=(1, 3, 3, 3, 3))))
    with pytest.raises(ShapeMismatch):
        conv3d(Tensor(rng.normal(size=(1, 1, 4, 4, 4))), Tensor(rng.normal(size=(1, 1, 5, 5, 5))))


def test_group_norm_normalizes_and_differentiates(rng):
    x = parameter(rng.normal(loc=3.0, scale=2.0, size=(2, 4, 3, 3, 3)), "x")
    gamma = parameter(rng.normal(size=(4,)), "gamma")
    beta = parameter(rng.normal(size=(4,)), "beta")
    plain = group_norm(x, Tensor(np.ones(4)), Tensor(np.zeros(4)), groups=2).data.reshape(2, 2, -1)
    assert np.allclose(plain.mean(axis=2), 0.0, atol=1e-10)
    assert np.allclose(plain.std(axis=2), 1.0, atol=1e-3)
    check_gradients(lambda: group_norm(x, gamma, beta, groups=2), [x, gamma, beta], rng)
    with pytest.raises(ShapeMismatch):
        group_norm(x, gamma, beta, groups=3)


def test_upsample_shape_constant_and_gradient(rng):
    constant = upsample2(Tensor(np.full((1, 1, 2, 3, 2), 5.0))).data
    assert constant.shape == (1, 1, 4, 6, 4)
    assert np.allclose(constant, 5.0)
    x = parameter(rng.normal(size=(1, 2, 2, 3, 2)), "x")
    check_gradients(lambda: upsample2(x), [x], rng)


def test_linear_gradients(rng):
    x = parameter(rng.normal(size=(3, 5)), "x")
    w = parameter(rng.normal(size=(5, 2)), "w")
    b = parameter(rng.normal(size=(2,)), "b")
    check_gradients(lambda: linear(x, w, b), [x, w, b], rng)


def test_soft_dice_values_and_gradient(rng):
    target = (rng.random((2, 1, 4, 4, 4)) > 0.5).astype(np.float64)
    perfect = soft_dice_loss(Tensor(target), target, alpha=0.0).item()
    assert perfect == pytest.approx(0.0, abs=1e-12)
    empty = np.zeros_like(target)
    assert soft_dice_loss(Tensor(empty), empty, alpha=1.0).item() == pytest.approx(1.0)
    pred = parameter(rng.uniform(0.05, 0.95, size=target.shape), "pred")
    check_gradients(lambda: soft_dice_loss(pred, target), [pred], rng)
    with pytest.raises(ShapeMismatch):
        soft_dice_loss(pred, target[:, :, :2])
