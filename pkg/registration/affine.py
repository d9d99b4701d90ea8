"""
Affine registration of binary skulls: 12 parameters about the target
centroid, optimized coarse-to-fine on Gaussian-smoothed images.
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from registration.optim import descend
from registration.pyramid import PyramidLevel, build_pyramid
from registration.transforms import AffineTransform, affine_to_field, image_mse, sample
from volume.errors import EmptyVolume
from volume.grid import VoxelGrid, centroid

logger = logging.getLogger(__name__)


@dataclass
class AffineResult:
    transform: AffineTransform
    initial_mse: float
    final_mse: float
    history: List[float] = field(default_factory=list)


def _level_cost(source: PyramidLevel, target: PyramidLevel, center: np.ndarray):
    points = target.physical_points()
    offsets = points - center.reshape(3, 1, 1, 1)
    n = target.image.size
    origin = np.asarray(source.origin).reshape(3, 1, 1, 1)
    spacing = np.asarray(source.spacing).reshape(3, 1, 1, 1)
    gradient_image = source.gradient
    fixed = target.image

    def fun(params: np.ndarray):
        linear = np.eye(3) + params[:9].reshape(3, 3)
        mapped = np.einsum("ij,j...->i...", linear, offsets) + (center + params[9:12]).reshape(3, 1, 1, 1)
        coordinates = (mapped - origin) / spacing
        residual = sample(source.image, coordinates, 1) - fixed
        # gradient in mm^-1
        grad_q = np.stack([sample(g, coordinates, 1) for g in gradient_image]) / spacing
        weighted = 2.0 / n * residual * grad_q
        d_linear = np.einsum("i...,j...->ij", weighted, offsets)
        d_translation = weighted.reshape(3, -1).sum(axis=1)
        return float(np.mean(residual * residual)), np.concatenate([d_linear.ravel(), d_translation])

    return fun


def fit_affine(source: VoxelGrid, target: VoxelGrid, levels: int = 3, iterations: int = 100,
               step: float = 0.5) -> AffineResult:
    """Register ``source`` onto ``target`` (the returned map takes target points to source points)."""
    source.require_same_geometry(target, what="affine registration pair")
    if not source.count() or not target.count():
        raise EmptyVolume("affine registration needs two nonempty masks")
    center = centroid(target)
    params = np.zeros(12)
    params[9:12] = centroid(source) - center
    initial_guess = AffineTransform.from_parameters(params, center)

    history: List[float] = []
    for source_level, target_level in zip(build_pyramid(source, levels), build_pyramid(target, levels)):
        voxel = float(np.mean(target_level.spacing))
        learning_rate = np.concatenate([np.full(9, 0.02 * step), np.full(3, step * voxel)])
        result = descend(_level_cost(source_level, target_level, center), params, learning_rate, iterations)
        params = result.x
        history.extend(result.history)
        logger.debug(f"Affine level x{target_level.factor}: cost {result.initial_cost:.5g} -> {result.cost:.5g}")

    candidates = [AffineTransform.identity(), initial_guess, AffineTransform.from_parameters(params, center)]
    scores = [image_mse(source, target, affine_to_field(t, target)) for t in candidates]
    # ties go to the optimized transform
    best = min(range(len(candidates)), key=lambda i: (scores[i], -i))
    logger.info(f"Affine registration: mse {scores[0]:.5f} -> {scores[best]:.5f} "
                f"(det={candidates[best].determinant:.4f})")
    return AffineResult(candidates[best], scores[0], scores[best], history)


def register_affine(source: VoxelGrid, target: VoxelGrid, levels: int = 3, iterations: int = 100,
                    step: float = 0.5) -> AffineTransform:
    return fit_affine(source, target, levels, iterations, step).transform


def recovered_scale(transform: AffineTransform) -> float:
    """Geometric mean scale of the linear part, in the source-to-target sense."""
    return float(abs(transform.determinant) ** (-1.0 / 3.0))
