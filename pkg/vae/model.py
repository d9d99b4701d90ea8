"""
Convolutional variational autoencoder over two-channel volumes
(defective skull, defect).

The encoder halves the resolution ``levels`` times with strided 3^3
convolutions and projects the flattened features to the latent mean and
log-variance. The decoder mirrors it with trilinear upsampling and 3^3
convolutions and ends in a two-channel sigmoid.
"""

import logging
from collections import OrderedDict
from dataclasses import asdict, dataclass
from typing import Optional, Tuple

import numpy as np

from nnet.layers import conv3d, group_norm, linear, upsample2
from nnet.tensor import Tensor, parameter
from nnet.unet import NetworkWeights
from volume.errors import ShapeMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VaeDescriptor:
    input_dims: Tuple[int, int, int] = (48, 40, 48)
    levels: int = 3
    base_channels: int = 4
    latent_dim: int = 32
    in_channels: int = 2
    groups: int = 2
    negative_slope: float = 0.01

    def __post_init__(self):
        object.__setattr__(self, "input_dims", tuple(int(d) for d in self.input_dims))
        if self.levels < 1 or self.latent_dim < 1 or self.base_channels < 1:
            raise ValueError(f"invalid VAE descriptor {self}")
        if any(d % 2 ** self.levels for d in self.input_dims):
            raise ValueError(f"input dims {self.input_dims} must be divisible by {2 ** self.levels}")
        if any(c % self.groups for c in self.channels):
            raise ValueError(f"channels {self.channels} are not divisible into {self.groups} groups")

    @property
    def channels(self):
        return [self.base_channels * 2 ** i for i in range(self.levels)]

    @property
    def bottom_dims(self) -> Tuple[int, int, int]:
        return tuple(d // 2 ** self.levels for d in self.input_dims)  # type: ignore[return-value]

    @property
    def flat_features(self) -> int:
        return self.channels[-1] * int(np.prod(self.bottom_dims))

    def to_dict(self) -> dict:
        data = asdict(self)
        data["input_dims"] = list(self.input_dims)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "VaeDescriptor":
        return cls(**data)


def build_vae(descriptor: VaeDescriptor, seed: int = 0, dtype=np.float32) -> NetworkWeights:
    rng = np.random.default_rng(seed)
    params: "OrderedDict[str, Tensor]" = OrderedDict()

    def conv(name: str, out_c: int, in_c: int, k: int) -> None:
        w = rng.normal(0.0, np.sqrt(2.0 / (in_c * k ** 3)), size=(out_c, in_c, k, k, k))
        params[f"{name}.weight"] = parameter(w.astype(dtype), f"{name}.weight")
        params[f"{name}.bias"] = parameter(np.zeros(out_c, dtype=dtype), f"{name}.bias")

    def norm(name: str, c: int) -> None:
        params[f"{name}.gamma"] = parameter(np.ones(c, dtype=dtype), f"{name}.gamma")
        params[f"{name}.beta"] = parameter(np.zeros(c, dtype=dtype), f"{name}.beta")

    def dense(name: str, in_f: int, out_f: int, scale: float = 1.0) -> None:
        w = rng.normal(0.0, scale * np.sqrt(1.0 / in_f), size=(in_f, out_f))
        params[f"{name}.weight"] = parameter(w.astype(dtype), f"{name}.weight")
        params[f"{name}.bias"] = parameter(np.zeros(out_f, dtype=dtype), f"{name}.bias")

    ch = descriptor.channels
    previous = descriptor.in_channels
    for i, c in enumerate(ch):
        conv(f"enc{i}", c, previous, 3)
        norm(f"enc{i}.norm", c)
        previous = c
    # small initial log-variance head keeps early samples close to the mean
    dense("mu", descriptor.flat_features, descriptor.latent_dim)
    dense("log_var", descriptor.flat_features, descriptor.latent_dim, scale=0.1)
    dense("expand", descriptor.latent_dim, descriptor.flat_features)
    for i in reversed(range(descriptor.levels)):
        out_c = ch[max(i - 1, 0)]
        conv(f"dec{i}", out_c, ch[i], 3)
        norm(f"dec{i}.norm", out_c)
    conv("head", descriptor.in_channels, ch[0], 1)
    return NetworkWeights(descriptor, params)


def _conv_block(w: NetworkWeights, name: str, x: Tensor, stride: int = 1) -> Tensor:
    d = w.descriptor
    h = conv3d(x, w[f"{name}.weight"], w[f"{name}.bias"], stride=stride)
    return group_norm(h, w[f"{name}.norm.gamma"], w[f"{name}.norm.beta"], d.groups).leaky_relu(d.negative_slope)


def encode(weights: NetworkWeights, x: Tensor) -> Tuple[Tensor, Tensor]:
    d = weights.descriptor
    if x.data.ndim != 5 or x.shape[1] != d.in_channels or tuple(x.shape[2:]) != d.input_dims:
        raise ShapeMismatch(f"expected (N, {d.in_channels}, {d.input_dims}), got {x.shape}")
    h = x
    for i in range(d.levels):
        h = _conv_block(weights, f"enc{i}", h, stride=2)
    flat = h.reshape(x.shape[0], -1)
    mu = linear(flat, weights["mu.weight"], weights["mu.bias"])
    log_var = linear(flat, weights["log_var.weight"], weights["log_var.bias"])
    return mu, log_var


def decode(weights: NetworkWeights, z: Tensor) -> Tensor:
    d = weights.descriptor
    if z.data.ndim != 2 or z.shape[1] != d.latent_dim:
        raise ShapeMismatch(f"expected latent (N, {d.latent_dim}), got {z.shape}")
    h = linear(z, weights["expand.weight"], weights["expand.bias"]).leaky_relu(d.negative_slope)
    h = h.reshape((z.shape[0], d.channels[-1]) + d.bottom_dims)
    for i in reversed(range(d.levels)):
        h = _conv_block(weights, f"dec{i}", upsample2(h))
    return conv3d(h, weights["head.weight"], weights["head.bias"]).sigmoid()


def reparameterize(mu: Tensor, log_var: Tensor, noise: np.ndarray) -> Tensor:
    """``E = μ + σ·ε`` with ``σ = exp(log σ² / 2)``."""
    return mu + (log_var * 0.5).exp() * noise.astype(mu.dtype)


def vae_forward(weights: NetworkWeights, x: Tensor, rng: Optional[np.random.Generator] = None,
                noise: Optional[np.ndarray] = None) -> Tuple[Tensor, Tensor, Tensor]:
    """Generated volume, latent mean and log-variance for input pairs ``x``."""
    if x.dtype != weights.dtype:
        x = Tensor(x.data.astype(weights.dtype))
    mu, log_var = encode(weights, x)
    if noise is None:
        noise = (rng or np.random.default_rng()).standard_normal(mu.shape)
    return decode(weights, reparameterize(mu, log_var, noise)), mu, log_var
