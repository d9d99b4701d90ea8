"""
One-call mask-to-mesh chain used by the mesh stage.
"""

import logging
from dataclasses import dataclass

from mesh.smoothing import clean_mesh, sinc_smooth
from mesh.surface import TriangleMesh, extract_isosurface, gaussian_smooth
from volume.errors import ConfigValidationError, EmptyVolume
from volume.grid import VoxelGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MeshConfig:
    sigma_vox: float = 1.0
    iso: float = 0.5
    sinc_iterations: int = 20
    passband: float = 0.1
    min_component_triangles: int = 50

    def __post_init__(self):
        if self.sigma_vox <= 0 or not 0.0 < self.iso < 1.0:
            raise ConfigValidationError("sigma_vox must be positive and iso in (0, 1)")
        if self.sinc_iterations < 0 or self.min_component_triangles < 0:
            raise ConfigValidationError("sinc_iterations and min_component_triangles must be >= 0")


def voxels_to_mesh(grid: VoxelGrid, config: MeshConfig = MeshConfig()) -> TriangleMesh:
    """Gaussian smoothing, isosurface, sinc smoothing and cleanup."""
    if not grid.data.any():
        raise EmptyVolume("cannot mesh an empty volume")
    surface = extract_isosurface(gaussian_smooth(grid, config.sigma_vox), config.iso)
    smoothed = sinc_smooth(surface, config.sinc_iterations, config.passband)
    cleaned = clean_mesh(smoothed, config.min_component_triangles)
    logger.info(f"Meshed {grid.count()} voxels: {len(cleaned.faces)} triangles, "
                f"watertight={cleaned.is_watertight}")
    return cleaned
