"""
Deformable registration: minimizes ``MSE(S∘u, T) + θ·Reg(u)`` over a dense
displacement field on an image pyramid, after an affine pre-alignment.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from registration.affine import register_affine
from registration.optim import descend
from registration.presets import SMOOTH, RegistrationPreset
from registration.pyramid import PyramidLevel, build_pyramid
from registration.transforms import (
    AffineTransform, diffusion_regularization, exponentiate, identity_coordinates,
    image_mse, positive_jacobian_fraction, resize_field, sample,
)
from volume.errors import EmptyVolume
from volume.grid import VoxelGrid

logger = logging.getLogger(__name__)

# Adam eps on voxel-sum gradients; damps steps where neither term pulls
DEFORMABLE_EPS = 1e-3


@dataclass
class DeformableResult:
    field: VoxelGrid                # total displacement, affine part included
    deformation: VoxelGrid          # deformable part only
    affine: AffineTransform
    initial_mse: float
    final_mse: float
    history: List[float] = field(default_factory=list)

    @property
    def mse_reduction(self) -> float:
        if self.initial_mse == 0:
            return 0.0
        return 1.0 - self.final_mse / self.initial_mse


def _voxel_affine(affine: AffineTransform, spacing, origin) -> Tuple[np.ndarray, np.ndarray]:
    """``φ(y) = M y + b`` in voxel indices of a lattice with ``spacing``/``origin``."""
    spacing = np.asarray(spacing, dtype=np.float64)
    origin = np.asarray(origin, dtype=np.float64)
    matrix = affine.matrix * spacing[np.newaxis, :] / spacing[:, np.newaxis]
    offset = (affine.matrix @ origin + affine.translation - origin) / spacing
    return matrix, offset


def _apply_voxel_affine(matrix: np.ndarray, offset: np.ndarray, points: np.ndarray) -> np.ndarray:
    return np.einsum("ij,j...->i...", matrix, points) + offset.reshape(3, 1, 1, 1)


def _prewarped(source: PyramidLevel, target: PyramidLevel, affine: AffineTransform) -> np.ndarray:
    """Source level image resampled on the target level lattice through ``affine``."""
    physical = affine.apply(np.moveaxis(target.physical_points(), 0, -1))
    coordinates = (np.moveaxis(physical, -1, 0) - np.asarray(source.origin).reshape(3, 1, 1, 1)) \
        / np.asarray(source.spacing).reshape(3, 1, 1, 1)
    return sample(source.image, coordinates, 1)


def _level_cost(moving: np.ndarray, fixed: np.ndarray, preset: RegistrationPreset):
    gradient_image = np.stack(np.gradient(moving, axis=(0, 1, 2)))
    grid = identity_coordinates(fixed.shape)
    n = fixed.size

    def fun(x: np.ndarray):
        u = exponentiate(x, preset.squaring_steps) if preset.diffeomorphic else x
        coordinates = grid + u
        residual = sample(moving, coordinates, 1) - fixed
        reg, reg_grad = diffusion_regularization(u)
        cost = float(np.mean(residual * residual)) + preset.theta * reg
        sampled = np.stack([sample(g, coordinates, 1) for g in gradient_image])
        # for velocity fields the displacement gradient stands in for the velocity gradient
        gradient = 2.0 / n * residual * sampled + preset.theta * reg_grad
        return cost, gradient * n

    return fun


def _check_inputs(source: VoxelGrid, target: VoxelGrid) -> None:
    source.require_same_geometry(target, what="deformable registration pair")
    if not source.count() or not target.count():
        raise EmptyVolume("deformable registration needs two nonempty masks")


def register_deformable(source: VoxelGrid, target: VoxelGrid, init: Optional[AffineTransform] = None,
                        preset: RegistrationPreset = SMOOTH) -> DeformableResult:
    """Coarse-to-fine deformable registration of ``source`` onto ``target``.

    The returned total field warps ``source`` into the ``target`` frame:
    ``u_total(x) = φ_A(x + u(x)) - x``.
    """
    _check_inputs(source, target)
    affine = init or AffineTransform.identity()
    x: Optional[np.ndarray] = None
    history: List[float] = []
    for source_level, target_level in zip(build_pyramid(source, preset.levels),
                                          build_pyramid(target, preset.levels)):
        x = np.zeros((3,) + target_level.dims) if x is None else resize_field(x, target_level.dims)
        moving = _prewarped(source_level, target_level, affine)
        result = descend(_level_cost(moving, target_level.image, preset), x, preset.step,
                         preset.iterations, tolerance=preset.tolerance, window=preset.window,
                         eps=DEFORMABLE_EPS)
        x = result.x
        history.extend(result.history)
        logger.debug(f"Deformable {preset.name} level x{target_level.factor}: "
                     f"cost {result.initial_cost:.5g} -> {result.cost:.5g} in {result.iterations} iterations")

    if x.shape[1:] != target.dims:
        x = resize_field(x, target.dims)
    u = exponentiate(x, preset.squaring_steps) if preset.diffeomorphic else x
    matrix, offset = _voxel_affine(affine, target.spacing, target.origin)
    grid = identity_coordinates(target.dims)
    total = _apply_voxel_affine(matrix, offset, grid + u) - grid

    deformation = VoxelGrid.vector(u, target.spacing, target.origin)
    total_field = VoxelGrid.vector(total, target.spacing, target.origin)
    initial_mse = image_mse(source, target)
    final_mse = image_mse(source, target, total_field)
    logger.info(f"Deformable registration ({preset.name}): mse {initial_mse:.5f} -> {final_mse:.5f}")
    return DeformableResult(total_field, deformation, affine, initial_mse, final_mse, history)


def register_pair(source: VoxelGrid, target: VoxelGrid, preset: RegistrationPreset = SMOOTH) -> DeformableResult:
    """Affine then deformable registration with the preset's settings."""
    affine = register_affine(source, target, preset.affine_levels, preset.affine_iterations, preset.affine_step)
    return register_deformable(source, target, affine, preset)


def invertibility(result: DeformableResult, mask: VoxelGrid) -> float:
    """Share of ``mask`` voxels with a positive Jacobian determinant of the deformable part."""
    return positive_jacobian_fraction(result.deformation, mask)
