"""
Spatial transforms used by registration: affine maps in physical
coordinates, dense displacement fields in fixed-grid voxel units, warping,
field composition, scaling and squaring, the diffusion regularizer and
Jacobian determinants.

A displacement field ``u`` is a vector VoxelGrid on the fixed lattice; the
warped image is ``moving(x + u(x))`` with ``x`` in voxel indices.
"""

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np
from scipy import ndimage

from volume.errors import DegenerateConfig, GeometryMismatch
from volume.grid import Interpolation, PayloadKind, VoxelGrid

logger = logging.getLogger(__name__)

MIN_DETERMINANT = 1e-9


@dataclass(frozen=True)
class AffineTransform:
    """``q = matrix @ p + translation`` mapping fixed physical points to moving ones (mm)."""
    matrix: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=np.float64).reshape(3, 3)
        translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not (np.all(np.isfinite(matrix)) and np.all(np.isfinite(translation))):
            raise DegenerateConfig("affine transform has non-finite entries")
        if abs(np.linalg.det(matrix)) <= MIN_DETERMINANT:
            raise DegenerateConfig(f"affine linear part is singular (det={np.linalg.det(matrix):.3e})")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "translation", translation)

    @classmethod
    def identity(cls) -> "AffineTransform":
        return cls(np.eye(3), np.zeros(3))

    @classmethod
    def from_parameters(cls, params: np.ndarray, center: Sequence[float]) -> "AffineTransform":
        """12 parameters about ``center``: ``q = (I + P)(p - c) + c + t``.

        ``params[:9]`` is the row-major offset ``P`` from the identity and
        ``params[9:]`` the translation ``t`` in mm.
        """
        params = np.asarray(params, dtype=np.float64)
        linear = np.eye(3) + params[:9].reshape(3, 3)
        center = np.asarray(center, dtype=np.float64)
        return cls(linear, center - linear @ center + params[9:12])

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Map ``(..., 3)`` physical points."""
        return np.asarray(points) @ self.matrix.T + self.translation

    def inverse(self) -> "AffineTransform":
        inv = np.linalg.inv(self.matrix)
        return AffineTransform(inv, -inv @ self.translation)

    def compose(self, inner: "AffineTransform") -> "AffineTransform":
        """``self ∘ inner``."""
        return AffineTransform(self.matrix @ inner.matrix, self.matrix @ inner.translation + self.translation)

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))

    def to_dict(self) -> dict:
        return {"matrix": self.matrix.tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "AffineTransform":
        return cls(np.asarray(data["matrix"]), np.asarray(data["translation"]))


def identity_coordinates(dims: Sequence[int]) -> np.ndarray:
    """``(3, D, H, W)`` array of voxel indices."""
    return np.stack(np.meshgrid(*(np.arange(d, dtype=np.float64) for d in dims), indexing="ij"))


def zero_field(grid: VoxelGrid) -> VoxelGrid:
    return VoxelGrid.vector(np.zeros((3,) + grid.dims), grid.spacing, grid.origin)


def affine_to_field(affine: AffineTransform, fixed: VoxelGrid) -> VoxelGrid:
    """Displacement (fixed voxels) equivalent to ``affine`` when both images share the fixed lattice."""
    spacing = np.asarray(fixed.spacing).reshape(3, 1, 1, 1)
    origin = np.asarray(fixed.origin).reshape(3, 1, 1, 1)
    grid = identity_coordinates(fixed.dims)
    physical = origin + grid * spacing
    mapped = np.einsum("ij,j...->i...", affine.matrix, physical) + affine.translation.reshape(3, 1, 1, 1)
    return VoxelGrid.vector((mapped - origin) / spacing - grid, fixed.spacing, fixed.origin)


def _require_field(moving: VoxelGrid, field: VoxelGrid) -> None:
    if field.kind is not PayloadKind.VECTOR:
        raise ValueError("displacement must be a vector grid")
    if field.dims != moving.dims:
        raise GeometryMismatch(f"field dims {field.dims} do not match image dims {moving.dims}")


def sample(volume: np.ndarray, coordinates: np.ndarray, order: int = 1, mode: str = "constant") -> np.ndarray:
    return ndimage.map_coordinates(volume, coordinates, order=order, mode=mode, cval=0.0, prefilter=False)


def warp(moving: VoxelGrid, field: VoxelGrid,
         interpolation: Interpolation = Interpolation.TRILINEAR) -> VoxelGrid:
    """Backward warp ``moving(x + u(x))``; samples outside the image read as 0.

    Binary images warped with trilinear interpolation are thresholded at 0.5.
    """
    _require_field(moving, field)
    coordinates = identity_coordinates(moving.dims) + field.data
    if moving.kind is PayloadKind.BINARY:
        values = sample(moving.data.astype(np.float64), coordinates, interpolation.order)
        return moving.with_data(values >= 0.5)
    if moving.kind is PayloadKind.SCALAR:
        return moving.with_data(sample(moving.data.astype(np.float64), coordinates, interpolation.order))
    return moving.with_data(np.stack([sample(c, coordinates, interpolation.order) for c in moving.data]))


def compose_arrays(outer: np.ndarray, inner: np.ndarray) -> np.ndarray:
    """Displacement of ``φ_outer ∘ φ_inner``: ``inner(x) + outer(x + inner(x))``.

    The outer field is sampled with edge clamping.
    """
    coordinates = identity_coordinates(inner.shape[1:]) + inner
    return inner + np.stack([sample(c, coordinates, 1, mode="nearest") for c in outer])


def compose(outer: VoxelGrid, inner: VoxelGrid) -> VoxelGrid:
    outer.require_same_geometry(inner, what="composed fields")
    return inner.with_data(compose_arrays(outer.data, inner.data))


def exponentiate(velocity: np.ndarray, steps: int = 7) -> np.ndarray:
    """Scaling and squaring: ``u = v / 2^steps`` composed with itself ``steps`` times."""
    if steps < 0:
        raise ValueError(f"squaring steps must be >= 0, got {steps}")
    field = velocity / float(2 ** steps)
    for _ in range(steps):
        field = compose_arrays(field, field)
    return field


def scaling_and_squaring(velocity: VoxelGrid, steps: int = 7) -> VoxelGrid:
    return velocity.with_data(exponentiate(velocity.data, steps))


def diffusion_regularization(field: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean squared forward difference over voxels and components, with its gradient."""
    n = field[0].size
    value = 0.0
    gradient = np.zeros_like(field)
    for axis in range(1, 4):
        diff = np.diff(field, axis=axis)
        value += float(np.sum(diff * diff))
        pad_front = [(0, 0)] * 4
        pad_back = [(0, 0)] * 4
        pad_front[axis] = (1, 0)
        pad_back[axis] = (0, 1)
        gradient += 2.0 * (np.pad(diff, pad_front) - np.pad(diff, pad_back))
    scale = 1.0 / (3.0 * n)
    return value * scale, gradient * scale


def jacobian_determinant(field: np.ndarray) -> np.ndarray:
    """``det(I + ∇u)`` per voxel, central differences (one-sided at the border)."""
    jac = np.empty((3, 3) + field.shape[1:])
    for component in range(3):
        grads = np.gradient(field[component], axis=(0, 1, 2))
        for axis in range(3):
            jac[component, axis] = grads[axis] + (1.0 if component == axis else 0.0)
    return np.linalg.det(np.moveaxis(jac, (0, 1), (-2, -1)))


def positive_jacobian_fraction(field: VoxelGrid, mask: VoxelGrid) -> float:
    """Share of ``mask`` voxels where the deformation is locally invertible."""
    det = jacobian_determinant(field.data)
    region = mask.data.astype(bool)
    if not region.any():
        return 1.0
    return float(np.count_nonzero(det[region] > 0)) / int(np.count_nonzero(region))


def resize_field(field: np.ndarray, dims: Sequence[int]) -> np.ndarray:
    """Resample a voxel-unit field onto another lattice over the same extent, rescaling its components."""
    dims = tuple(int(d) for d in dims)
    source = field.shape[1:]
    ratio = [d / s for d, s in zip(dims, source)]
    axes = [(np.arange(d) + 0.5) / r - 0.5 for d, r in zip(dims, ratio)]
    coordinates = np.stack(np.meshgrid(*axes, indexing="ij"))
    return np.stack([sample(field[c], coordinates, 1, mode="nearest") * ratio[c] for c in range(3)])


def image_mse(source: VoxelGrid, target: VoxelGrid, field: VoxelGrid = None) -> float:
    """MSE between ``source`` (optionally warped by ``field``, trilinear) and ``target`` as real images."""
    source.require_same_geometry(target, what="registration images")
    values = source.data.astype(np.float64)
    if field is not None:
        _require_field(source, field)
        values = sample(values, identity_coordinates(source.dims) + field.data, 1)
    residual = values - target.data.astype(np.float64)
    return float(np.mean(residual * residual))
