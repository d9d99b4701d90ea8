"""
Synthetic skull generator.

Skulls are open ellipsoidal shells (the base below a cutting plane is removed)
with seeded axis jitter; defects are the part of the shell inside a cutting
solid placed on the outer surface. Two dataset groups mimic the two training
distributions that the pipeline links together:

- ``varied``: mixed defect types at random positions
- ``uniform``: a single spherical-cap defect on the upper half
"""

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np

from dataio.cases import CaseRecord
from volume.errors import DegenerateConfig
from volume.grid import VoxelGrid

logger = logging.getLogger(__name__)


class DefectType(Enum):
    SPHERICAL_CAP = "spherical_cap"
    BOX = "box"
    COMPOSITE = "composite"
    BILATERAL = "bilateral"
    FRONTAL = "frontal"


class DatasetGroup(Enum):
    VARIED = "varied"
    UNIFORM = "uniform"


GROUP_DEFECT_TYPES = {
    DatasetGroup.VARIED: (DefectType.SPHERICAL_CAP, DefectType.BOX, DefectType.COMPOSITE,
                          DefectType.BILATERAL, DefectType.FRONTAL),
    DatasetGroup.UNIFORM: (DefectType.SPHERICAL_CAP,),
}
GROUP_JITTER = {DatasetGroup.VARIED: 0.08, DatasetGroup.UNIFORM: 0.04}


@dataclass(frozen=True)
class SyntheticConfig:
    shell_radius_mm: float = 42.0
    thickness_mm: float = 5.0
    defect_type: Optional[DefectType] = DefectType.SPHERICAL_CAP
    defect_fraction: float = 0.1
    dims: Tuple[int, int, int] = (56, 48, 56)
    spacing: Tuple[float, float, float] = (2.0, 2.0, 2.0)
    axis_ratios: Tuple[float, float, float] = (1.0, 0.85, 1.0)
    axis_jitter: float = 0.08
    # shell below -base_cut * (vertical semi-axis) is removed
    base_cut: float = 0.35
    group: Optional[DatasetGroup] = None

    def validated(self) -> "SyntheticConfig":
        if self.shell_radius_mm <= 0 or self.thickness_mm <= 0:
            raise DegenerateConfig("shell radius and thickness must be positive")
        if self.thickness_mm >= self.shell_radius_mm:
            raise DegenerateConfig(
                f"thickness {self.thickness_mm} mm must be smaller than radius {self.shell_radius_mm} mm")
        if not 0.0 < self.defect_fraction <= 0.5:
            raise DegenerateConfig(f"defect fraction must lie in (0, 0.5], got {self.defect_fraction}")
        if not 0.0 <= self.axis_jitter < 0.5:
            raise DegenerateConfig(f"axis jitter must lie in [0, 0.5), got {self.axis_jitter}")
        if any(d < 4 for d in self.dims) or any(s <= 0 for s in self.spacing):
            raise DegenerateConfig(f"grid dims {self.dims} / spacing {self.spacing} are too small")
        return self

    @classmethod
    def for_group(cls, group: DatasetGroup, **overrides) -> "SyntheticConfig":
        base = cls(defect_type=None, axis_jitter=GROUP_JITTER[group], group=group)
        return replace(base, **overrides)


@dataclass
class _Skull:
    positions: np.ndarray          # (3, D, H, W) physical offsets from the center
    semi_axes: np.ndarray          # outer semi-axes in mm
    shell: np.ndarray              # bool mask


def _physical_offsets(config: SyntheticConfig) -> np.ndarray:
    dims, spacing = np.asarray(config.dims), np.asarray(config.spacing)
    center = (dims - 1) / 2.0
    axes = [(np.arange(d) - c) * s for d, c, s in zip(dims, center, spacing)]
    return np.stack(np.meshgrid(*axes, indexing="ij"))


def _build_shell(config: SyntheticConfig, rng: np.random.Generator) -> _Skull:
    positions = _physical_offsets(config)
    jitter = rng.uniform(-config.axis_jitter, config.axis_jitter, size=3)
    semi_axes = config.shell_radius_mm * np.asarray(config.axis_ratios) * (1.0 + jitter)
    inner = semi_axes - config.thickness_mm
    if np.any(inner <= 0):
        raise DegenerateConfig(f"shell thickness exceeds semi-axes {semi_axes.round(2).tolist()}")
    outer_rho = np.sqrt(sum((positions[i] / semi_axes[i]) ** 2 for i in range(3)))
    inner_rho = np.sqrt(sum((positions[i] / inner[i]) ** 2 for i in range(3)))
    shell = (outer_rho <= 1.0) & (inner_rho > 1.0)
    shell &= positions[2] >= -config.base_cut * semi_axes[2]
    if not shell.any():
        raise DegenerateConfig(f"shell is empty at dims {config.dims} and spacing {config.spacing}")
    return _Skull(positions, semi_axes, shell)


def _surface_point(direction: np.ndarray, semi_axes: np.ndarray) -> np.ndarray:
    direction = direction / np.linalg.norm(direction)
    return direction / math.sqrt(float(np.sum((direction / semi_axes) ** 2)))


def _random_direction(rng: np.random.Generator, min_vertical: float) -> np.ndarray:
    while True:
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        if direction[2] >= min_vertical:
            return direction


def _ball(positions: np.ndarray, center: np.ndarray, radius: float) -> np.ndarray:
    return sum((positions[i] - center[i]) ** 2 for i in range(3)) <= radius * radius


def _cube(positions: np.ndarray, center: np.ndarray, half_side: float) -> np.ndarray:
    return np.all(np.abs(positions - center.reshape(3, 1, 1, 1)) <= half_side, axis=0)


def _cutting_solid(defect_type: DefectType, skull: _Skull, fraction: float,
                   rng: np.random.Generator, min_vertical: float) -> np.ndarray:
    mean_radius = float(np.mean(skull.semi_axes))

    def cap_radius(f: float) -> float:
        # a ball of radius 2R·sqrt(f) centered on a sphere of radius R covers a fraction f of its area
        return 2.0 * mean_radius * math.sqrt(f)

    def cube_half(f: float) -> float:
        # a cube section of side 2h covers 4h² = f·4πR²
        return mean_radius * math.sqrt(math.pi * f)

    positions = skull.positions

    if defect_type is DefectType.SPHERICAL_CAP:
        center = _surface_point(_random_direction(rng, min_vertical), skull.semi_axes)
        return _ball(positions, center, cap_radius(fraction))
    if defect_type is DefectType.BOX:
        center = _surface_point(_random_direction(rng, min_vertical), skull.semi_axes)
        return _cube(positions, center, cube_half(fraction))
    if defect_type is DefectType.COMPOSITE:
        first = _random_direction(rng, min_vertical)
        second = first + rng.normal(scale=0.35, size=3)
        second[2] = max(second[2], min_vertical + 0.05)
        cap = _ball(positions, _surface_point(first, skull.semi_axes), cap_radius(fraction / 2.0))
        box = _cube(positions, _surface_point(second, skull.semi_axes), cube_half(fraction / 2.0))
        return cap | box
    if defect_type is DefectType.BILATERAL:
        direction = _random_direction(rng, max(min_vertical, 0.2))
        direction[0] = abs(direction[0]) + 0.3
        mirrored = direction * np.array([-1.0, 1.0, 1.0])
        radius = cap_radius(fraction / 2.0)
        return (_ball(positions, _surface_point(direction, skull.semi_axes), radius)
                | _ball(positions, _surface_point(mirrored, skull.semi_axes), radius))
    if defect_type is DefectType.FRONTAL:
        direction = np.array([rng.uniform(-0.2, 0.2), 1.0, rng.uniform(0.2, 0.5)])
        return _cube(positions, _surface_point(direction, skull.semi_axes), cube_half(fraction))
    raise DegenerateConfig(f"unknown defect type {defect_type}")


def generate_synthetic_case(seed: int, config: SyntheticConfig = SyntheticConfig(),
                            case_id: Optional[str] = None) -> CaseRecord:
    """Deterministic synthetic case for ``seed``.

    ``defect = complete ∧ cutting solid`` and ``defective = complete ∧ ¬defect``,
    so the case invariants hold exactly.
    """
    config = config.validated()
    rng = np.random.default_rng(seed)
    skull = _build_shell(config, rng)
    group = config.group
    if config.defect_type is not None:
        defect_type = config.defect_type
    else:
        choices = GROUP_DEFECT_TYPES[group or DatasetGroup.VARIED]
        defect_type = choices[int(rng.integers(len(choices)))]
    min_vertical = 0.15 if group is DatasetGroup.UNIFORM else -0.1
    cutting = _cutting_solid(defect_type, skull, config.defect_fraction, rng, min_vertical)
    defect = skull.shell & cutting
    if not defect.any():
        raise DegenerateConfig(f"defect of type {defect_type.value} misses the shell (seed={seed})")

    complete = VoxelGrid.binary(skull.shell, config.spacing)
    case_id = case_id or f"{group.value if group else 'synthetic'}_{seed:03d}"
    metadata = {
        "seed": int(seed),
        "defect_type": defect_type.value,
        "group": group.value if group else None,
        "semi_axes_mm": [round(float(a), 4) for a in skull.semi_axes],
    }
    record = CaseRecord.from_defect(complete, complete.with_data(defect), case_id, metadata)
    logger.debug(f"Generated {case_id}: defect={defect_type.value} "
                 f"ratio={record.defect.count() / record.complete.count():.3f}")
    return record.validate()


def generate_dataset(n: int, seed: int, config: SyntheticConfig = SyntheticConfig()) -> List[CaseRecord]:
    """``n`` cases with per-case seeds drawn from ``seed``."""
    seeds = np.random.default_rng(seed).integers(0, 2 ** 31 - 1, size=n)
    prefix = config.group.value if config.group else "synthetic"
    return [generate_synthetic_case(int(s), config, case_id=f"{prefix}_{i:03d}") for i, s in enumerate(seeds)]
