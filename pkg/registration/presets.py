"""
Registration presets.

``smooth`` integrates a stationary velocity field and runs to convergence,
producing invertible, strongly regularized deformations. ``imperfect``
optimizes the displacement directly with a relaxed regularizer and a fixed
budget, producing shapes that sit between the two skulls of a pair.
"""

from dataclasses import dataclass, replace
from typing import Optional

from volume.errors import ConfigValidationError


@dataclass(frozen=True)
class RegistrationPreset:
    name: str
    theta: float
    levels: int
    iterations: int                 # per level; the cap when ``tolerance`` is set
    diffeomorphic: bool
    squaring_steps: int = 7
    step: float = 0.25              # voxels of the current level
    tolerance: Optional[float] = None
    window: int = 10
    affine_levels: int = 3
    affine_iterations: int = 100
    affine_step: float = 0.5

    def __post_init__(self):
        if self.levels < 1:
            raise ConfigValidationError(f"preset '{self.name}' needs levels >= 1")
        if self.theta < 0:
            raise ConfigValidationError(f"preset '{self.name}' needs theta >= 0")
        if self.iterations < 1 or self.step <= 0:
            raise ConfigValidationError(f"preset '{self.name}' needs positive iterations and step")
        if self.diffeomorphic and self.squaring_steps < 1:
            raise ConfigValidationError(f"preset '{self.name}' needs squaring steps >= 1")

    def with_overrides(self, **overrides) -> "RegistrationPreset":
        return replace(self, **{k: v for k, v in overrides.items() if v is not None})


SMOOTH = RegistrationPreset(name="smooth", theta=5.0, levels=3, iterations=200, diffeomorphic=True,
                            squaring_steps=7, step=0.25, tolerance=1e-5, window=10)
IMPERFECT = RegistrationPreset(name="imperfect", theta=0.1, levels=3, iterations=60, diffeomorphic=False,
                               step=0.5)

PRESETS = {preset.name: preset for preset in (SMOOTH, IMPERFECT)}


def get_preset(name: str) -> RegistrationPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigValidationError(f"unknown registration preset '{name}', expected one of {sorted(PRESETS)}")
