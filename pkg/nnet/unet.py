"""
Residual U-Net for defect reconstruction and refinement.

``levels`` is the number of downsamplings; level ``i`` works with
``base_channels * 2**i`` channels. Each level holds residual blocks
(conv-norm-act-conv-norm, additive shortcut, act). Downsampling is a
strided 3^3 convolution; upsampling is trilinear x2 followed by a 1^3
convolution, concatenated with the skip and fused by another 1^3
convolution. A final 1^3 convolution and a sigmoid give per-voxel
probabilities.
"""

import logging
from collections import OrderedDict
from dataclasses import asdict, dataclass
from typing import Dict, Iterator, List, Tuple

import numpy as np

from nnet.layers import conv3d, group_norm, upsample2
from nnet.tensor import Tensor, concat, parameter
from volume.errors import ShapeMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UNetDescriptor:
    levels: int = 2
    base_channels: int = 4
    in_channels: int = 1
    out_channels: int = 1
    blocks_per_level: int = 1
    groups: int = 2
    negative_slope: float = 0.01

    def __post_init__(self):
        if self.levels < 1 or self.base_channels < 1 or self.blocks_per_level < 1:
            raise ValueError(f"invalid U-Net descriptor {self}")
        for channels in self.channels:
            if channels % self.groups:
                raise ValueError(f"{channels} channels are not divisible into {self.groups} groups")

    @property
    def channels(self) -> List[int]:
        return [self.base_channels * 2 ** i for i in range(self.levels + 1)]

    @property
    def divisor(self) -> int:
        return 2 ** self.levels

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "UNetDescriptor":
        return cls(**data)


def _block_count(c: int) -> int:
    return 2 * (27 * c * c + c) + 2 * (2 * c)


def parameter_count(descriptor: UNetDescriptor) -> int:
    """Closed-form number of scalar parameters."""
    ch = descriptor.channels
    blocks = descriptor.blocks_per_level
    total = 27 * descriptor.in_channels * ch[0] + ch[0]
    total += sum(blocks * _block_count(c) for c in ch)
    total += sum(27 * ch[i] * ch[i + 1] + ch[i + 1] for i in range(descriptor.levels))
    for i in range(descriptor.levels):
        total += ch[i + 1] * ch[i] + ch[i]          # upsampling projection
        total += 2 * ch[i] * ch[i] + ch[i]          # skip fusion
        total += blocks * _block_count(ch[i])
    total += ch[0] * descriptor.out_channels + descriptor.out_channels
    return total


class NetworkWeights:
    """Ordered named parameters plus the descriptor that shaped them."""

    def __init__(self, descriptor, parameters: "OrderedDict[str, Tensor]"):
        self.descriptor = descriptor
        self.parameters = parameters

    def __getitem__(self, name: str) -> Tensor:
        return self.parameters[name]

    def __iter__(self) -> Iterator[Tuple[str, Tensor]]:
        return iter(self.parameters.items())

    def __len__(self) -> int:
        return len(self.parameters)

    def num_parameters(self) -> int:
        return int(sum(p.data.size for p in self.parameters.values()))

    def zero_grad(self) -> None:
        for tensor in self.parameters.values():
            tensor.zero_grad()

    def state(self) -> Dict[str, np.ndarray]:
        return {name: tensor.data.copy() for name, tensor in self.parameters.items()}

    def load_state(self, state: Dict[str, np.ndarray]) -> None:
        for name, tensor in self.parameters.items():
            if state[name].shape != tensor.shape:
                raise ShapeMismatch(f"parameter {name}: stored {state[name].shape}, expected {tensor.shape}")
            tensor.data = np.array(state[name], dtype=tensor.dtype)

    def astype(self, dtype) -> "NetworkWeights":
        params = OrderedDict((name, parameter(t.data.astype(dtype), name)) for name, t in self.parameters.items())
        return NetworkWeights(self.descriptor, params)

    @property
    def dtype(self):
        return next(iter(self.parameters.values())).dtype


class _Builder:
    def __init__(self, rng: np.random.Generator, dtype):
        self.rng = rng
        self.dtype = dtype
        self.params: "OrderedDict[str, Tensor]" = OrderedDict()

    def conv(self, name: str, out_c: int, in_c: int, k: int) -> None:
        fan_in = in_c * k ** 3
        weights = self.rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(out_c, in_c, k, k, k))
        self.params[f"{name}.weight"] = parameter(weights.astype(self.dtype), f"{name}.weight")
        self.params[f"{name}.bias"] = parameter(np.zeros(out_c, dtype=self.dtype), f"{name}.bias")

    def norm(self, name: str, c: int) -> None:
        self.params[f"{name}.gamma"] = parameter(np.ones(c, dtype=self.dtype), f"{name}.gamma")
        self.params[f"{name}.beta"] = parameter(np.zeros(c, dtype=self.dtype), f"{name}.beta")

    def block(self, name: str, c: int) -> None:
        self.conv(f"{name}.conv1", c, c, 3)
        self.norm(f"{name}.norm1", c)
        self.conv(f"{name}.conv2", c, c, 3)
        self.norm(f"{name}.norm2", c)


def build_unet(descriptor: UNetDescriptor, seed: int = 0, dtype=np.float32) -> NetworkWeights:
    """He-initialized weights; deterministic per seed."""
    b = _Builder(np.random.default_rng(seed), dtype)
    ch = descriptor.channels
    b.conv("stem", ch[0], descriptor.in_channels, 3)
    for i, c in enumerate(ch):
        for j in range(descriptor.blocks_per_level):
            b.block(f"enc{i}.block{j}", c)
        if i < descriptor.levels:
            b.conv(f"down{i}", ch[i + 1], c, 3)
    for i in reversed(range(descriptor.levels)):
        b.conv(f"up{i}", ch[i], ch[i + 1], 1)
        b.conv(f"fuse{i}", ch[i], 2 * ch[i], 1)
        for j in range(descriptor.blocks_per_level):
            b.block(f"dec{i}.block{j}", ch[i])
    b.conv("head", descriptor.out_channels, ch[0], 1)
    weights = NetworkWeights(descriptor, b.params)
    logger.debug(f"Built U-Net {descriptor} with {weights.num_parameters()} parameters")
    return weights


def _conv(w: NetworkWeights, name: str, x: Tensor, stride: int = 1) -> Tensor:
    return conv3d(x, w[f"{name}.weight"], w[f"{name}.bias"], stride=stride)


def _norm(w: NetworkWeights, name: str, x: Tensor) -> Tensor:
    return group_norm(x, w[f"{name}.gamma"], w[f"{name}.beta"], w.descriptor.groups)


def residual_block(w: NetworkWeights, name: str, x: Tensor) -> Tensor:
    slope = w.descriptor.negative_slope
    h = _norm(w, f"{name}.norm1", _conv(w, f"{name}.conv1", x)).leaky_relu(slope)
    h = _norm(w, f"{name}.norm2", _conv(w, f"{name}.conv2", h))
    return (h + x).leaky_relu(slope)


def forward(weights: NetworkWeights, x: Tensor) -> Tensor:
    """Per-voxel probabilities, same spatial shape as ``x``."""
    d = weights.descriptor
    if x.data.ndim != 5 or x.shape[1] != d.in_channels:
        raise ShapeMismatch(f"expected input (N, {d.in_channels}, D, H, W), got {x.shape}")
    if any(s % d.divisor for s in x.shape[2:]):
        raise ShapeMismatch(f"spatial shape {x.shape[2:]} must be divisible by {d.divisor}")
    if x.dtype != weights.dtype:
        x = Tensor(x.data.astype(weights.dtype))

    h = _conv(weights, "stem", x).leaky_relu(d.negative_slope)
    skips = []
    for i in range(d.levels + 1):
        for j in range(d.blocks_per_level):
            h = residual_block(weights, f"enc{i}.block{j}", h)
        if i < d.levels:
            skips.append(h)
            h = _conv(weights, f"down{i}", h, stride=2).leaky_relu(d.negative_slope)
    for i in reversed(range(d.levels)):
        h = _conv(weights, f"up{i}", upsample2(h))
        h = _conv(weights, f"fuse{i}", concat([h, skips[i]], axis=1)).leaky_relu(d.negative_slope)
        for j in range(d.blocks_per_level):
            h = residual_block(weights, f"dec{i}.block{j}", h)
    return _conv(weights, "head", h).sigmoid()
