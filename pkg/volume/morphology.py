"""
Binary morphology on voxel grids: ball-shaped erosion/dilation/closing/opening,
connected-component labeling and majority (median) filtering.
"""

import logging
from functools import lru_cache
from typing import List, Tuple

import numpy as np
from scipy import ndimage

from volume.grid import PayloadKind, VoxelGrid

logger = logging.getLogger(__name__)

MORPHOLOGY_OPS = ("erode", "dilate", "close", "open")


@lru_cache(maxsize=16)
def ball(radius: int) -> np.ndarray:
    """Discrete Euclidean ball: a voxel is included iff its center lies within ``radius``."""
    if radius < 1:
        raise ValueError(f"structuring element radius must be >= 1, got {radius}")
    axis = np.arange(-radius, radius + 1)
    i, j, k = np.meshgrid(axis, axis, axis, indexing="ij")
    element = (i * i + j * j + k * k) <= radius * radius
    element.flags.writeable = False
    return element


def _require_binary(grid: VoxelGrid) -> np.ndarray:
    if grid.kind is not PayloadKind.BINARY:
        raise ValueError(f"expected a binary grid, got {grid.kind.value}")
    return grid.data


def erode(grid: VoxelGrid, radius: int = 1) -> VoxelGrid:
    mask = _require_binary(grid)
    return grid.with_data(ndimage.binary_erosion(mask, structure=ball(radius), border_value=0))


def dilate(grid: VoxelGrid, radius: int = 1) -> VoxelGrid:
    mask = _require_binary(grid)
    return grid.with_data(ndimage.binary_dilation(mask, structure=ball(radius), border_value=0))


def _padded(mask: np.ndarray, width: int):
    padded = np.pad(mask, width, mode="constant", constant_values=False)
    inner = tuple(slice(width, width + d) for d in mask.shape)
    return padded, inner


def close(grid: VoxelGrid, radius: int = 1) -> VoxelGrid:
    """Dilation followed by erosion, computed on a zero-padded copy so the
    grid boundary does not erode content."""
    mask = _require_binary(grid)
    padded, inner = _padded(mask, 2 * radius)
    element = ball(radius)
    closed = ndimage.binary_erosion(ndimage.binary_dilation(padded, structure=element),
                                    structure=element, border_value=0)
    return grid.with_data(closed[inner])


def open_(grid: VoxelGrid, radius: int = 1) -> VoxelGrid:
    mask = _require_binary(grid)
    element = ball(radius)
    opened = ndimage.binary_dilation(ndimage.binary_erosion(mask, structure=element, border_value=0),
                                     structure=element)
    return grid.with_data(opened)


def morphology(grid: VoxelGrid, op: str, radius: int = 1) -> VoxelGrid:
    """Dispatch by name: erode | dilate | close | open."""
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    handlers = {"erode": erode, "dilate": dilate, "close": close, "open": open_}
    if op not in handlers:
        raise ValueError(f"unknown morphology op '{op}', expected one of {MORPHOLOGY_OPS}")
    return handlers[op](grid, radius)


def contour(grid: VoxelGrid) -> VoxelGrid:
    """One-voxel inner boundary: ``x xor erode(x, 1)``."""
    mask = _require_binary(grid)
    return grid.with_data(np.logical_xor(mask, erode(grid, 1).data))


def _connectivity_structure(connectivity: int) -> np.ndarray:
    if connectivity == 6:
        return ndimage.generate_binary_structure(3, 1)
    if connectivity == 26:
        return ndimage.generate_binary_structure(3, 3)
    raise ValueError(f"connectivity must be 6 or 26, got {connectivity}")


def connected_components(grid: VoxelGrid, connectivity: int = 26) -> Tuple[VoxelGrid, List[int]]:
    """Label components 1..K ordered by decreasing size (ties by first occurrence).

    Returns the label grid (scalar payload of integers) and the sizes.
    """
    mask = _require_binary(grid)
    labels, count = ndimage.label(mask, structure=_connectivity_structure(connectivity))
    if count == 0:
        return grid.with_data(np.zeros(grid.dims), PayloadKind.SCALAR), []
    sizes = np.bincount(labels.ravel())[1:]
    order = np.argsort(-sizes, kind="stable")
    remap = np.zeros(count + 1, dtype=np.int64)
    remap[order + 1] = np.arange(1, count + 1)
    relabeled = remap[labels]
    return grid.with_data(relabeled.astype(np.float64), PayloadKind.SCALAR), [int(s) for s in sizes[order]]


def keep_largest(grid: VoxelGrid, k: int = 1, connectivity: int = 26) -> VoxelGrid:
    """Zero every component except the ``k`` largest."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    labels, sizes = connected_components(grid, connectivity)
    if len(sizes) > k:
        logger.debug(f"keep_largest dropped {len(sizes) - k} components, sizes={sizes[k:][:10]}")
    return grid.with_data((labels.data >= 1) & (labels.data <= k), PayloadKind.BINARY)


def _box_counts(volume: np.ndarray, size: int) -> np.ndarray:
    # separable box mean, scaled back to exact integer counts
    return np.rint(ndimage.uniform_filter(volume.astype(np.float64), size=size, mode="constant", cval=0.0)
                   * size ** 3)


def median_filter(grid: VoxelGrid, radius: int = 1) -> VoxelGrid:
    """Majority vote in the (2r+1)^3 cube; ties resolve to 0.

    Voxels outside the grid do not vote, so a full grid stays full while
    isolated voxels are removed.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    mask = _require_binary(grid)
    size = 2 * radius + 1
    ones = _box_counts(mask, size)
    voters = _box_counts(np.ones(mask.shape), size)
    return grid.with_data(2 * ones > voters)
