"""
Gaussian image pyramids for coarse-to-fine registration.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
from scipy import ndimage

from volume.grid import VoxelGrid
from registration.transforms import sample


@dataclass(frozen=True)
class PyramidLevel:
    image: np.ndarray
    spacing: Tuple[float, float, float]
    origin: Tuple[float, float, float]
    factor: int

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(self.image.shape)  # type: ignore[return-value]

    @property
    def gradient(self) -> np.ndarray:
        """``(3, D, H, W)`` image gradient in voxel units of this level."""
        return np.stack(np.gradient(self.image, axis=(0, 1, 2)))

    def physical_points(self) -> np.ndarray:
        axes = [o + np.arange(d) * s for o, d, s in zip(self.origin, self.dims, self.spacing)]
        return np.stack(np.meshgrid(*axes, indexing="ij"))


def downsample(volume: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Cell-centered linear resampling onto ``dims`` over the same extent."""
    axes = [(np.arange(d) + 0.5) * s / d - 0.5 for d, s in zip(dims, volume.shape)]
    return sample(volume, np.stack(np.meshgrid(*axes, indexing="ij")), 1, mode="nearest")


def build_pyramid(grid: VoxelGrid, levels: int) -> List[PyramidLevel]:
    """Smoothed levels, coarsest first; level ``k`` is downsampled by ``2**k`` and
    smoothed with sigma of one voxel of its own resolution."""
    if levels < 1:
        raise ValueError(f"pyramid needs at least one level, got {levels}")
    volume = grid.data.astype(np.float64)
    pyramid = []
    for k in reversed(range(levels)):
        factor = 2 ** k
        smoothed = ndimage.gaussian_filter(volume, sigma=float(factor), mode="constant", truncate=3.0)
        dims = tuple(max(1, int(np.ceil(d / factor))) for d in grid.dims)
        image = smoothed if factor == 1 else downsample(smoothed, dims)
        spacing = tuple(s * d / ld for s, d, ld in zip(grid.spacing, grid.dims, dims))
        origin = tuple(o - 0.5 * s + 0.5 * ls for o, s, ls in zip(grid.origin, grid.spacing, spacing))
        pyramid.append(PyramidLevel(image, spacing, origin, factor))
    return pyramid
