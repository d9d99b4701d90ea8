"""
Shared fixtures: seeded generators, small synthetic skulls and case directories.
"""

import numpy as np
import pytest

from agents.core.config import load_config
from agents.core.run_context import RunContext
from dataio.cases import write_case
from dataio.synthetic import DatasetGroup, SyntheticConfig, generate_dataset, generate_synthetic_case
from nnet import build_unet, save_weights
from volume.grid import VoxelGrid

SMALL_DIMS = (28, 24, 28)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def sphere_mask():
    """Factory for digitized balls and shells: ``sphere_mask(dims, radius, inner=0, center=None)``."""
    def make(dims, radius, inner=0.0, center=None, spacing=(1.0, 1.0, 1.0)):
        center = np.asarray(center if center is not None else [(d - 1) / 2.0 for d in dims], dtype=np.float64)
        grid = np.stack(np.meshgrid(*[np.arange(d) for d in dims], indexing="ij")).astype(np.float64)
        r = np.sqrt(sum((grid[i] - center[i]) ** 2 for i in range(3)))
        return VoxelGrid.binary((r <= radius) & (r >= inner), spacing)
    return make


@pytest.fixture
def small_config():
    return SyntheticConfig(shell_radius_mm=22.0, thickness_mm=4.0, dims=SMALL_DIMS, spacing=(2.0, 2.0, 2.0))


@pytest.fixture
def synthetic_case(small_config):
    return generate_synthetic_case(3, small_config)


@pytest.fixture
def case_dir(tmp_path, small_config):
    """Six small cases, three per dataset group, in the case-directory layout."""
    root = tmp_path / "cases"
    for group in (DatasetGroup.VARIED, DatasetGroup.UNIFORM):
        config = SyntheticConfig.for_group(group, shell_radius_mm=22.0, thickness_mm=4.0,
                                           dims=SMALL_DIMS, spacing=(2.0, 2.0, 2.0))
        for record in generate_dataset(3, 11, config):
            write_case(record, root)
    return root


@pytest.fixture
def desk_config():
    """Desk profile shrunk to the small synthetic grids."""
    overrides = {
        "synthetic": {"n": 6, "dims": list(SMALL_DIMS), "shell_radius_mm": 22.0, "thickness_mm": 4.0},
        "preprocess": {"offset": 2, "target_spacing": [2.5, 2.5, 2.5], "target_dims": [24, 24, 24]},
        "train": {"epochs": 2, "cases_per_iteration": 4, "augment": False,
                  "network": {"levels": 2, "base_channels": 2, "blocks_per_level": 1}},
        "refine": {"offset": 2, "dims": [16, 16, 16], "network": {"levels": 2, "base_channels": 2}},
        "vae": {"latent_dim": 4, "levels": 3, "base_channels": 2, "epochs": 1, "n_generate": 2},
        "mesh": {"min_component_triangles": 0},
    }
    config, _ = load_config(None, overrides)
    return config


@pytest.fixture
def run_context(desk_config, tmp_path):
    return RunContext(desk_config, "test", tmp_path / "run")


@pytest.fixture
def eager_checkpoint(tmp_path, desk_config):
    """Reconstruction weights whose output is sigmoid(20) everywhere."""
    weights = build_unet(desk_config.train.network.descriptor(), seed=0)
    weights["head.weight"].data[...] = 0.0
    weights["head.bias"].data[...] = 20.0
    return save_weights(weights, tmp_path / "eager.cdrn")
