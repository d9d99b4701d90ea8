"""
Online affine augmentation: one random scale/rotation/translation per case,
applied identically to every volume of the case with nearest sampling.
"""

from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import ndimage


@dataclass(frozen=True)
class AugmentationRanges:
    scale: Tuple[float, float] = (0.85, 1.15)
    rotation_deg: Tuple[float, float] = (-15.0, 15.0)
    translation_vox: Tuple[float, float] = (-10.0, 10.0)


def _rotation(angles_rad: np.ndarray) -> np.ndarray:
    a, b, c = angles_rad
    rx = np.array([[1, 0, 0], [0, np.cos(a), -np.sin(a)], [0, np.sin(a), np.cos(a)]])
    ry = np.array([[np.cos(b), 0, np.sin(b)], [0, 1, 0], [-np.sin(b), 0, np.cos(b)]])
    rz = np.array([[np.cos(c), -np.sin(c), 0], [np.sin(c), np.cos(c), 0], [0, 0, 1]])
    return rz @ ry @ rx


def random_affine(rng: np.random.Generator, ranges: AugmentationRanges = AugmentationRanges()) -> Tuple[np.ndarray, np.ndarray]:
    """Output-to-input voxel map ``(matrix, translation)`` about the volume center."""
    scale = rng.uniform(*ranges.scale)
    angles = np.deg2rad(rng.uniform(*ranges.rotation_deg, size=3))
    translation = rng.uniform(*ranges.translation_vox, size=3)
    return _rotation(angles) / scale, translation


def apply_affine(volume: np.ndarray, matrix: np.ndarray, translation: np.ndarray) -> np.ndarray:
    """Nearest resampling of a binary volume; output voxel ``y`` reads ``M (y - c) + c + t``."""
    center = (np.asarray(volume.shape, dtype=np.float64) - 1.0) / 2.0
    offset = center - matrix @ center + translation
    out = ndimage.affine_transform(volume.astype(np.uint8), matrix, offset=offset, output_shape=volume.shape,
                                   order=0, mode="constant", cval=0)
    return out.astype(bool)


def augment_volumes(volumes: Sequence[np.ndarray], rng: np.random.Generator,
                    ranges: AugmentationRanges = AugmentationRanges()) -> Tuple[np.ndarray, ...]:
    """Draw one transform and apply it to all ``volumes``."""
    matrix, translation = random_affine(rng, ranges)
    return tuple(apply_affine(v, matrix, translation) for v in volumes)
