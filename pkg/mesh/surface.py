"""
Voxel masks to surfaces: Gaussian smoothing of the binary mask and
marching-cubes isosurface extraction in physical coordinates.
"""

import logging

import numpy as np
import trimesh
from scipy import ndimage
from skimage import measure

from volume.grid import PayloadKind, VoxelGrid

logger = logging.getLogger(__name__)

TriangleMesh = trimesh.Trimesh

TRUNCATE = 3.0


def empty_mesh() -> TriangleMesh:
    return trimesh.Trimesh(vertices=np.zeros((0, 3)), faces=np.zeros((0, 3), dtype=np.int64), process=False)


def gaussian_smooth(grid: VoxelGrid, sigma_vox: float = 1.0) -> VoxelGrid:
    """Separable Gaussian blur truncated at 3σ with edge clamping; values stay in [0, 1]."""
    if sigma_vox <= 0:
        raise ValueError(f"sigma_vox must be positive, got {sigma_vox}")
    smooth = ndimage.gaussian_filter(grid.data.astype(np.float64), sigma=sigma_vox,
                                     truncate=TRUNCATE, mode="nearest")
    return grid.with_data(np.clip(smooth, 0.0, 1.0), PayloadKind.SCALAR)


def extract_isosurface(field: VoxelGrid, iso: float = 0.5) -> TriangleMesh:
    """Surface at ``iso`` with vertices in mm and outward winding (values above
    ``iso`` are inside). Returns an empty mesh when the field never crosses ``iso``."""
    data = field.data.astype(np.float64)
    if data.min() >= iso or data.max() <= iso:
        logger.debug(f"Field range [{data.min():.3f}, {data.max():.3f}] does not straddle iso={iso}")
        return empty_mesh()
    # a zero border closes surfaces that touch the grid boundary
    padded = np.pad(data, 1, mode="constant", constant_values=min(0.0, data.min()))
    vertices, faces, _, _ = measure.marching_cubes(padded, level=iso, spacing=field.spacing,
                                                   gradient_direction="descent")
    vertices = vertices - np.asarray(field.spacing) + np.asarray(field.origin)
    mesh = trimesh.Trimesh(vertices=vertices, faces=faces, process=False)
    logger.debug(f"Isosurface iso={iso}: {len(mesh.vertices)} vertices, {len(mesh.faces)} triangles")
    return mesh
