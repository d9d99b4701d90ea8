"""
Implant modeling: thin a reconstructed defect into an implantable plate.

The defect is intersected with a copy of itself shifted along the direction
from the skull centroid to the defect contour centroid. The shift grows by
``step_mm`` per iteration until the remaining volume ratio reaches the
target. Each candidate is median filtered, has skull voxels removed and
keeps only its largest component.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from volume.errors import ConfigValidationError, DegenerateDirection, EmptyVolume
from volume.grid import PayloadKind, VoxelGrid, centroid, translate
from volume.morphology import contour, keep_largest, median_filter

logger = logging.getLogger(__name__)

MAX_HALVINGS = 8


@dataclass(frozen=True)
class ImplantConfig:
    target_volume_ratio: float = 0.7
    step_mm: float = 0.5
    median_radius: int = 1
    max_iterations: int = 200
    tolerance: float = 0.05
    # keep the skull-XOR reading of the cleanup step instead of the set difference
    literal_xor: bool = False

    def __post_init__(self):
        if not 0.0 < self.target_volume_ratio <= 1.0:
            raise ConfigValidationError(f"target_volume_ratio must lie in (0, 1], got {self.target_volume_ratio}")
        if self.step_mm <= 0:
            raise ConfigValidationError(f"step_mm must be positive, got {self.step_mm}")
        if self.median_radius < 0 or self.max_iterations < 1:
            raise ConfigValidationError("median_radius must be >= 0 and max_iterations >= 1")
        if not 0.0 <= self.tolerance < 1.0:
            raise ConfigValidationError(f"tolerance must lie in [0, 1), got {self.tolerance}")


@dataclass
class ImplantResult:
    implant: VoxelGrid
    iterations_used: int
    final_ratio: float
    converged: bool
    direction: np.ndarray
    shift_mm: float


def _outward_normal(defect: VoxelGrid, rim: VoxelGrid) -> np.ndarray:
    """Normal of the smoothed defect surface at the contour voxel nearest the contour centroid."""
    smooth = ndimage.gaussian_filter(defect.data.astype(np.float64), sigma=1.0, mode="constant")
    gradients = np.gradient(smooth, *defect.spacing)
    voxels = np.argwhere(rim.data)
    positions = np.asarray(defect.origin) + voxels * np.asarray(defect.spacing)
    nearest = tuple(voxels[np.argmin(np.linalg.norm(positions - centroid(rim), axis=1))])
    normal = -np.array([g[nearest] for g in gradients])
    norm = np.linalg.norm(normal)
    if norm < 1e-12:
        raise DegenerateDirection("defect surface normal vanishes at the contour centroid")
    return normal / norm


def thinning_direction(defect: VoxelGrid, defective_skull: VoxelGrid) -> np.ndarray:
    """Unit vector from the skull centroid to the defect contour centroid.

    Falls back to the outward surface normal when the two centroids coincide,
    and to the +z axis when that is degenerate too.
    """
    rim = contour(defect)
    if not rim.data.any():
        rim = defect
    try:
        vector = centroid(rim) - centroid(defective_skull)
        norm = np.linalg.norm(vector)
        if norm < 1e-9:
            raise DegenerateDirection("contour centroid coincides with the skull centroid")
        return vector / norm
    except DegenerateDirection as e:
        logger.warning(f"{e}; falling back to the outward surface normal")
    try:
        return _outward_normal(defect, rim)
    except DegenerateDirection as e:
        logger.warning(f"{e}; falling back to the +z axis")
        return np.array([0.0, 0.0, 1.0])


def implant_candidate(defect: VoxelGrid, defective_skull: VoxelGrid, direction: np.ndarray,
                      shift_mm: float, config: ImplantConfig) -> VoxelGrid:
    """One thinning pass for a total shift of ``shift_mm`` along ``direction``."""
    shifted = translate(defect, direction * shift_mm)
    current = defect.with_data(defect.data & shifted.data)
    if config.median_radius >= 1:
        current = median_filter(current, config.median_radius)
    if config.literal_xor:
        current = current.with_data(current.data ^ defective_skull.data)
    else:
        current = current.with_data(current.data & ~defective_skull.data)
    if current.data.any():
        current = keep_largest(current, 1)
    return current


def model_implant(defect: VoxelGrid, defective_skull: VoxelGrid,
                  config: ImplantConfig = ImplantConfig()) -> ImplantResult:
    """Thin ``defect`` until ``|implant| / |defect| <= target_volume_ratio``.

    Overshooting below ``target - tolerance`` bisects the last step. Without
    reaching the target in ``max_iterations`` steps the last candidate is
    returned with ``converged=False``.
    """
    for grid, name in ((defect, "defect"), (defective_skull, "defective skull")):
        if grid.kind is not PayloadKind.BINARY:
            raise ValueError(f"{name} must be a binary grid")
    defect.require_same_geometry(defective_skull, what="defect and defective skull")
    if not defect.data.any():
        raise EmptyVolume("implant modeling needs a nonempty defect")
    if not defective_skull.data.any():
        raise EmptyVolume("implant modeling needs a nonempty defective skull")

    direction = thinning_direction(defect, defective_skull)
    total = float(defect.count())
    target = config.target_volume_ratio

    def evaluate(shift: float):
        grid = implant_candidate(defect, defective_skull, direction, shift, config)
        return grid, grid.count() / total

    previous_ratio: Optional[float] = None
    current, ratio, shift = defect, 1.0, 0.0
    for t in range(1, config.max_iterations + 1):
        shift = t * config.step_mm
        current, ratio = evaluate(shift)
        if previous_ratio is not None and ratio > previous_ratio + 1e-12:
            logger.warning(f"Implant ratio increased from {previous_ratio:.4f} to {ratio:.4f} at step {t}")
        logger.debug(f"Implant step {t}: shift={shift:.3f} mm ratio={ratio:.4f}")
        if ratio <= target:
            if ratio < target - config.tolerance:
                current, ratio, shift = _bisect(evaluate, (t - 1) * config.step_mm, shift,
                                                current, ratio, target, config.tolerance)
            logger.info(f"Implant converged after {t} steps: ratio={ratio:.4f} shift={shift:.3f} mm")
            return ImplantResult(current, t, ratio, True, direction, shift)
        previous_ratio = ratio

    logger.warning(f"Implant target {target} not reached in {config.max_iterations} steps (ratio={ratio:.4f})")
    return ImplantResult(current, config.max_iterations, ratio, False, direction, shift)


def _bisect(evaluate, low: float, high: float, best, best_ratio: float, target: float, tolerance: float):
    """Narrow ``[low, high]`` (ratio above / below target) towards the accepted band."""
    best_shift = high
    for _ in range(MAX_HALVINGS):
        mid = 0.5 * (low + high)
        grid, ratio = evaluate(mid)
        if ratio > target:
            low = mid
            continue
        high = mid
        best, best_ratio, best_shift = grid, ratio, mid
        if ratio >= target - tolerance:
            break
    return best, best_ratio, best_shift
