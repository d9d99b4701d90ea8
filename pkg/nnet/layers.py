"""
Differentiable volumetric layers built on :mod:`nnet.tensor`.

conv3d is a cross-correlation computed as one channel contraction per
kernel offset; its backward pass scatters the same contractions in reverse.
"""

from itertools import product
from typing import Optional

import numpy as np

from nnet.tensor import Tensor
from volume.errors import ShapeMismatch


def conv3d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None, stride: int = 1,
           padding: Optional[int] = None) -> Tensor:
    """``x`` is (N, C, D, H, W), ``weight`` is (O, C, k, k, k) with k in {1, 3}."""
    if x.data.ndim != 5 or weight.data.ndim != 5:
        raise ShapeMismatch(f"conv3d expects 5-D input and weight, got {x.shape} and {weight.shape}")
    n, channels = x.shape[:2]
    out_channels, in_channels, k = weight.shape[:3]
    if in_channels != channels:
        raise ShapeMismatch(f"conv3d weight expects {in_channels} channels, input has {channels}")
    if weight.shape[2:] != (k, k, k) or k not in (1, 3):
        raise ShapeMismatch(f"conv3d supports cubic 1 or 3 kernels, got {weight.shape[2:]}")
    if bias is not None and bias.shape != (out_channels,):
        raise ShapeMismatch(f"conv3d bias shape {bias.shape} does not match {out_channels} outputs")
    pad = (k - 1) // 2 if padding is None else int(padding)
    padded = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad), (pad, pad))) if pad else x.data
    spatial = padded.shape[2:]
    out_dims = tuple((s - k) // stride + 1 for s in spatial)
    if any(d < 1 for d in out_dims):
        raise ShapeMismatch(f"conv3d output would be empty for input {x.shape}")

    def window(a: int, b: int, c: int):
        return (slice(None), slice(None),
                slice(a, a + stride * (out_dims[0] - 1) + 1, stride),
                slice(b, b + stride * (out_dims[1] - 1) + 1, stride),
                slice(c, c + stride * (out_dims[2] - 1) + 1, stride))

    offsets = list(product(range(k), repeat=3))
    # accumulate in (N, D, H, W, O) and move channels at the end
    out = np.zeros((n,) + out_dims + (out_channels,), dtype=x.data.dtype)
    for a, b, c in offsets:
        out += np.tensordot(padded[window(a, b, c)], weight.data[:, :, a, b, c], axes=([1], [1]))
    out = np.moveaxis(out, -1, 1)
    if bias is not None:
        out = out + bias.data.reshape(1, -1, 1, 1, 1)
    out = np.ascontiguousarray(out)

    def backward(g: np.ndarray) -> None:
        if bias is not None:
            bias._accumulate(g.sum(axis=(0, 2, 3, 4)))
        if weight.requires_grad:
            grad_w = np.zeros_like(weight.data)
            for a, b, c in offsets:
                grad_w[:, :, a, b, c] = np.tensordot(g, padded[window(a, b, c)], axes=([0, 2, 3, 4], [0, 2, 3, 4]))
            weight._accumulate(grad_w)
        if x.requires_grad:
            grad_padded = np.zeros_like(padded)
            for a, b, c in offsets:
                contribution = np.tensordot(g, weight.data[:, :, a, b, c], axes=([1], [0]))
                grad_padded[window(a, b, c)] += np.moveaxis(contribution, -1, 1)
            if pad:
                grad_padded = grad_padded[:, :, pad:-pad, pad:-pad, pad:-pad]
            x._accumulate(grad_padded)

    parents = (x, weight) if bias is None else (x, weight, bias)
    result = Tensor(out, parents=parents)
    if result.requires_grad:
        result._backward = backward
    return result


def group_norm(x: Tensor, gamma: Tensor, beta: Tensor, groups: int, eps: float = 1e-5) -> Tensor:
    """Normalize each group of channels over its channels and voxels, then scale and shift per channel."""
    n, channels = x.shape[:2]
    if channels % groups:
        raise ShapeMismatch(f"{channels} channels cannot be split into {groups} groups")
    grouped = x.data.reshape(n, groups, -1)
    mean = grouped.mean(axis=2, keepdims=True)
    centered = grouped - mean
    var = (centered * centered).mean(axis=2, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    normalized = (centered * inv_std).reshape(x.shape)
    shape = (1, channels, 1, 1, 1)
    out = normalized * gamma.data.reshape(shape) + beta.data.reshape(shape)

    def backward(g: np.ndarray) -> None:
        gamma._accumulate((g * normalized).sum(axis=(0, 2, 3, 4)))
        beta._accumulate(g.sum(axis=(0, 2, 3, 4)))
        if x.requires_grad:
            d_norm = (g * gamma.data.reshape(shape)).reshape(n, groups, -1)
            x_hat = normalized.reshape(n, groups, -1)
            m = x_hat.shape[2]
            d_x = inv_std / m * (m * d_norm - d_norm.sum(axis=2, keepdims=True)
                                 - x_hat * (d_norm * x_hat).sum(axis=2, keepdims=True))
            x._accumulate(d_x.reshape(x.shape))

    result = Tensor(out, parents=(x, gamma, beta))
    if result.requires_grad:
        result._backward = backward
    return result


def _upsample_axis(data: np.ndarray, axis: int) -> np.ndarray:
    previous = np.concatenate([np.take(data, [0], axis=axis), np.take(data, np.arange(data.shape[axis] - 1), axis=axis)], axis=axis)
    following = np.concatenate([np.take(data, np.arange(1, data.shape[axis]), axis=axis), np.take(data, [-1], axis=axis)], axis=axis)
    even = 0.75 * data + 0.25 * previous
    odd = 0.75 * data + 0.25 * following
    stacked = np.stack([even, odd], axis=axis + 1)
    shape = list(data.shape)
    shape[axis] *= 2
    return stacked.reshape(shape)


def _upsample_axis_backward(g: np.ndarray, axis: int) -> np.ndarray:
    shape = list(g.shape)
    shape[axis] //= 2
    split = g.reshape(shape[:axis + 1] + [2] + shape[axis + 1:])
    even = np.take(split, 0, axis=axis + 1)
    odd = np.take(split, 1, axis=axis + 1)
    grad = 0.75 * (even + odd)
    size = shape[axis]

    def at(array, index):
        return np.take(array, index, axis=axis)

    # even[i] reads x[i-1] (x[0] at i=0); odd[i] reads x[i+1] (x[-1] at the end)
    to_previous = np.zeros_like(grad)
    to_previous_index = [slice(None)] * grad.ndim
    to_previous_index[axis] = slice(0, size - 1)
    to_previous[tuple(to_previous_index)] = at(even, np.arange(1, size))
    first = [slice(None)] * grad.ndim
    first[axis] = slice(0, 1)
    to_previous[tuple(first)] += at(even, [0])

    to_next = np.zeros_like(grad)
    to_next_index = [slice(None)] * grad.ndim
    to_next_index[axis] = slice(1, size)
    to_next[tuple(to_next_index)] = at(odd, np.arange(0, size - 1))
    last = [slice(None)] * grad.ndim
    last[axis] = slice(size - 1, size)
    to_next[tuple(last)] += at(odd, [size - 1])
    return grad + 0.25 * (to_previous + to_next)


def upsample2(x: Tensor) -> Tensor:
    """Trilinear x2 upsampling (half-pixel centers, edge clamped), separable over D, H, W."""
    out = x.data
    for axis in (2, 3, 4):
        out = _upsample_axis(out, axis)

    def backward(g: np.ndarray) -> None:
        for axis in (4, 3, 2):
            g = _upsample_axis_backward(g, axis)
        x._accumulate(g)

    result = Tensor(out, parents=(x,))
    if result.requires_grad:
        result._backward = backward
    return result


def linear(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None) -> Tensor:
    """``x @ weight + bias`` for (N, F) inputs and (F, O) weights."""
    out = x.matmul(weight)
    return out + bias if bias is not None else out
