"""
Pipeline configuration.

One pydantic model with a section per stage. Values resolve in the order
model defaults < profile defaults < YAML file < command-line flags, and
string values may reference the environment as ``${NAME:default}``.
"""

import copy
import hashlib
import logging
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import orjson
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from dataio.synthetic import DatasetGroup, SyntheticConfig
from implant.modeling import ImplantConfig
from mesh.chain import MeshConfig
from nnet.trainer import TrainConfig
from nnet.unet import UNetDescriptor
from registration.presets import RegistrationPreset, get_preset
from vae.model import VaeDescriptor
from vae.trainer import VaeTrainConfig
from volume.errors import ConfigValidationError

logger = logging.getLogger(__name__)

Triple = Tuple[float, float, float]
Dims = Tuple[int, int, int]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PathsSection(_Section):
    data_dir: str = "data/cases"
    output_dir: str = "runs/latest"


class SyntheticSection(_Section):
    n: int = Field(50, ge=1)
    group: Literal["varied", "uniform", "both"] = "both"
    dims: Dims = (56, 48, 56)
    spacing: Triple = (2.0, 2.0, 2.0)
    shell_radius_mm: float = Field(42.0, gt=0)
    thickness_mm: float = Field(5.0, gt=0)
    defect_fraction: float = Field(0.1, gt=0, le=0.5)

    def to_synthetic_config(self, group: DatasetGroup) -> SyntheticConfig:
        return SyntheticConfig.for_group(group, dims=tuple(self.dims), spacing=tuple(self.spacing),
                                         shell_radius_mm=self.shell_radius_mm, thickness_mm=self.thickness_mm,
                                         defect_fraction=self.defect_fraction)


class PreprocessSection(_Section):
    offset: int = Field(20, ge=0)
    target_spacing: Triple = (1.0, 1.0, 1.0)
    target_dims: Dims = (240, 200, 240)
    split: str = "9:1"


class PostprocessSection(_Section):
    closing_radius: int = Field(2, ge=0)
    keep_components: int = Field(1, ge=0)
    closing_mode: Literal["union", "defect_only"] = "union"
    threshold: float = Field(0.5, gt=0, lt=1)


class RegistrationSection(_Section):
    preset: Literal["smooth", "imperfect"] = "smooth"
    pair_budget: Optional[int] = Field(None, ge=0)
    theta: Optional[float] = Field(None, ge=0)
    iterations: Optional[int] = Field(None, ge=1)
    levels: Optional[int] = Field(None, ge=1)

    def to_preset(self, name: Optional[str] = None) -> RegistrationPreset:
        return get_preset(name or self.preset).with_overrides(
            theta=self.theta, iterations=self.iterations, levels=self.levels)


class NetworkSection(_Section):
    levels: int = Field(2, ge=1)
    base_channels: int = Field(4, ge=1)
    blocks_per_level: int = Field(1, ge=1)
    groups: int = Field(2, ge=1)

    def descriptor(self) -> UNetDescriptor:
        try:
            return UNetDescriptor(levels=self.levels, base_channels=self.base_channels,
                                  blocks_per_level=self.blocks_per_level, groups=self.groups)
        except ValueError as e:
            raise ConfigValidationError(str(e)) from e


class TrainSection(_Section):
    batch_size: int = Field(2, ge=1)
    cases_per_iteration: int = Field(500, ge=1)
    initial_lr: float = Field(0.003, gt=0)
    decay: float = Field(0.97, ge=0.95, le=0.99)
    alpha: float = Field(1.0, ge=0)
    epochs: int = Field(50, ge=1)
    patience: int = Field(10, ge=1)
    augment: bool = True
    precision: Literal["float32", "float64"] = "float32"
    network: NetworkSection = NetworkSection()

    def to_train_config(self, seed: int) -> TrainConfig:
        return TrainConfig(batch_size=self.batch_size, cases_per_iteration=self.cases_per_iteration,
                           initial_lr=self.initial_lr, decay=self.decay, alpha=self.alpha, augment=self.augment,
                           epochs=self.epochs, patience=self.patience, seed=seed, precision=self.precision)


class RefineSection(_Section):
    enabled: bool = False
    offset: int = Field(10, ge=0)
    dims: Dims = (200, 200, 200)
    threshold: float = Field(0.5, gt=0, lt=1)
    network: NetworkSection = NetworkSection()


class VaeSection(_Section):
    latent_dim: int = Field(32, ge=1)
    levels: int = Field(3, ge=1)
    base_channels: int = Field(4, ge=1)
    beta: float = Field(0.01, ge=0)
    epochs: int = Field(50, ge=1)
    batch_size: int = Field(2, ge=1)
    initial_lr: float = Field(0.001, gt=0)
    decay: float = Field(0.97, ge=0.95, le=0.99)
    n_generate: int = Field(50, ge=0)
    threshold: float = Field(0.5, gt=0, lt=1)

    def descriptor(self, input_dims: Dims) -> VaeDescriptor:
        try:
            return VaeDescriptor(input_dims=tuple(input_dims), levels=self.levels,
                                 base_channels=self.base_channels, latent_dim=self.latent_dim)
        except ValueError as e:
            raise ConfigValidationError(str(e)) from e

    def to_train_config(self, seed: int, precision: str = "float32") -> VaeTrainConfig:
        return VaeTrainConfig(batch_size=self.batch_size, initial_lr=self.initial_lr, decay=self.decay,
                              beta=self.beta, epochs=self.epochs, seed=seed, precision=precision)


class ImplantSection(_Section):
    enabled: bool = False
    target_volume_ratio: float = Field(0.7, gt=0, le=1)
    step_mm: float = Field(0.5, gt=0)
    median_radius: int = Field(1, ge=0)
    max_iterations: int = Field(200, ge=1)
    tolerance: float = Field(0.05, ge=0, lt=1)
    literal_xor: bool = False

    def to_implant_config(self) -> ImplantConfig:
        return ImplantConfig(**self.model_dump(exclude={"enabled"}))


class MeshSection(_Section):
    sigma_vox: float = Field(1.0, gt=0)
    iso: float = Field(0.5, gt=0, lt=1)
    sinc_iterations: int = Field(20, ge=0)
    passband: float = Field(0.1, gt=0, lt=2)
    min_component_triangles: int = Field(50, ge=0)
    clip_axis: Optional[int] = Field(None, ge=0, le=2)
    clip_position_mm: Optional[float] = None
    ascii: bool = False

    def to_mesh_config(self) -> MeshConfig:
        return MeshConfig(sigma_vox=self.sigma_vox, iso=self.iso, sinc_iterations=self.sinc_iterations,
                          passband=self.passband, min_component_triangles=self.min_component_triangles)


class MetricsSection(_Section):
    tau_mm: float = Field(2.0, gt=0)


ABLATION_TAGS = ("T1", "T3", "Cmb", "CReg", "CRegRef", "CRegVAE", "CRegVAERef", "CRegIm", "CImplant")


class PipelineConfig(_Section):
    profile: Literal["desk", "full"] = "desk"
    seed: int = 0
    ablation: Literal[ABLATION_TAGS] = "Cmb"  # type: ignore[valid-type]
    jobs: int = Field(1, ge=1)
    paths: PathsSection = PathsSection()
    synthetic: SyntheticSection = SyntheticSection()
    preprocess: PreprocessSection = PreprocessSection()
    postprocess: PostprocessSection = PostprocessSection()
    registration: RegistrationSection = RegistrationSection()
    train: TrainSection = TrainSection()
    refine: RefineSection = RefineSection()
    vae: VaeSection = VaeSection()
    implant: ImplantSection = ImplantSection()
    mesh: MeshSection = MeshSection()
    metrics: MetricsSection = MetricsSection()

    @property
    def recipe(self) -> "AblationRecipe":
        return ABLATIONS[self.ablation]


@dataclass(frozen=True)
class AblationRecipe:
    """Training-set recipe and stage toggles behind one ablation tag."""
    groups: Tuple[str, ...]
    registration: Optional[str] = None
    vae: bool = False
    refine: bool = False
    implant: bool = False


ABLATIONS: Dict[str, AblationRecipe] = {
    "T1": AblationRecipe(("varied",)),
    "T3": AblationRecipe(("uniform",)),
    "Cmb": AblationRecipe(("varied", "uniform")),
    "CReg": AblationRecipe(("varied", "uniform"), registration="smooth"),
    "CRegRef": AblationRecipe(("varied", "uniform"), registration="smooth", refine=True),
    "CRegVAE": AblationRecipe(("varied", "uniform"), registration="smooth", vae=True),
    "CRegVAERef": AblationRecipe(("varied", "uniform"), registration="smooth", vae=True, refine=True),
    "CRegIm": AblationRecipe(("varied", "uniform"), registration="imperfect"),
    "CImplant": AblationRecipe(("varied", "uniform"), registration="imperfect", implant=True),
}

PROFILES: Dict[str, Dict[str, Any]] = {
    "desk": {
        "synthetic": {"n": 50, "dims": [56, 48, 56], "spacing": [2.0, 2.0, 2.0],
                      "shell_radius_mm": 42.0, "thickness_mm": 5.0},
        "preprocess": {"offset": 4, "target_spacing": [2.5, 2.5, 2.5], "target_dims": [48, 40, 48]},
        "train": {"cases_per_iteration": 50, "epochs": 20, "network": {"levels": 2, "base_channels": 4}},
        "refine": {"offset": 4, "dims": [32, 32, 32], "network": {"levels": 2, "base_channels": 4}},
        "vae": {"latent_dim": 32, "levels": 3, "base_channels": 4, "epochs": 20, "n_generate": 50},
    },
    "full": {
        "synthetic": {"n": 200, "dims": [240, 200, 240], "spacing": [1.0, 1.0, 1.0],
                      "shell_radius_mm": 85.0, "thickness_mm": 7.0},
        "preprocess": {"offset": 20, "target_spacing": [1.0, 1.0, 1.0], "target_dims": [240, 200, 240]},
        "train": {"cases_per_iteration": 500, "epochs": 50, "network": {"levels": 3, "base_channels": 16}},
        "refine": {"offset": 10, "dims": [200, 200, 200], "network": {"levels": 3, "base_channels": 16}},
        "vae": {"latent_dim": 128, "levels": 3, "base_channels": 8, "epochs": 50, "n_generate": 1000},
    },
}

_ENV_PATTERN = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)(?::([^}]*))?\}")


def interpolate_env(value: Any) -> Any:
    """Replace ``${NAME}`` / ``${NAME:default}`` in every string of a nested structure."""
    if isinstance(value, dict):
        return {k: interpolate_env(v) for k, v in value.items()}
    if isinstance(value, list):
        return [interpolate_env(v) for v in value]
    if not isinstance(value, str):
        return value

    def substitute(match: "re.Match[str]") -> str:
        name, default = match.group(1), match.group(2)
        if name in os.environ:
            return os.environ[name]
        if default is None:
            raise ConfigValidationError(f"environment variable '{name}' is not set and has no default")
        return default

    return _ENV_PATTERN.sub(substitute, value)


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    path = Path(path)
    if not path.is_file():
        raise ConfigValidationError(f"config file not found: {path}")
    try:
        data = yaml.safe_load(path.read_text()) or {}
    except yaml.YAMLError as e:
        raise ConfigValidationError(f"{path}: invalid YAML: {e}") from e
    if not isinstance(data, dict):
        raise ConfigValidationError(f"{path}: top level must be a mapping")
    return interpolate_env(data)


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Dict[str, Any]] = None) -> Tuple[PipelineConfig, List[str]]:
    """Effective configuration plus the precedence chain that produced it."""
    file_values = read_config_file(path) if path is not None else {}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    profile = overrides.get("profile") or file_values.get("profile") or "desk"
    if profile not in PROFILES:
        raise ConfigValidationError(f"unknown profile '{profile}', expected one of {sorted(PROFILES)}")
    chain = ["defaults", f"profile:{profile}"]
    merged = deep_merge(PROFILES[profile], file_values)
    if path is not None:
        chain.append(f"file:{path}")
    if overrides:
        merged = deep_merge(merged, overrides)
        chain.append(f"flags:{','.join(sorted(_leaf_keys(overrides)))}")
    merged["profile"] = profile
    try:
        config = PipelineConfig.model_validate(merged)
    except ValidationError as e:
        raise ConfigValidationError(f"invalid configuration: {e}") from e
    return config, chain


def _leaf_keys(values: Dict[str, Any], prefix: str = "") -> List[str]:
    keys = []
    for key, value in values.items():
        if isinstance(value, dict):
            keys.extend(_leaf_keys(value, f"{prefix}{key}."))
        else:
            keys.append(f"{prefix}{key}")
    return keys


def config_hash(config: PipelineConfig) -> str:
    """sha256 of the canonical JSON dump."""
    payload = orjson.dumps(config.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS)
    return hashlib.sha256(payload).hexdigest()
