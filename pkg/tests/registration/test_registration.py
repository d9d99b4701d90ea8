import numpy as np
import pytest

from dataio.synthetic import generate_dataset
from registration import (
    IMPERFECT, SMOOTH, augment_by_registration, fit_affine, get_preset, invertibility, register_pair,
    sample_pairs, warp,
)
from volume.errors import ConfigValidationError, EmptyDataset, EmptyVolume
from volume.grid import VoxelGrid

DIMS = (40, 40, 40)
CENTER = np.array([17.0, 19.5, 19.5])


def test_sample_pairs():
    assert sample_pairs(3, None, 0) == [(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)]
    assert sample_pairs(3, 0, 0) == []
    chosen = sample_pairs(5, 4, seed=9)
    assert len(chosen) == 4 and len(set(chosen)) == 4
    assert chosen == sample_pairs(5, 4, seed=9)


def test_presets():
    assert get_preset("smooth") is SMOOTH
    assert SMOOTH.diffeomorphic and not IMPERFECT.diffeomorphic
    assert SMOOTH.theta > IMPERFECT.theta
    assert SMOOTH.with_overrides(theta=None, iterations=5).iterations == 5
    with pytest.raises(ConfigValidationError):
        get_preset("rigid")
    with pytest.raises(ConfigValidationError):
        SMOOTH.with_overrides(levels=0)


def test_affine_needs_nonempty_masks():
    empty = VoxelGrid.binary(np.zeros((8, 8, 8)))
    with pytest.raises(EmptyVolume):
        fit_affine(empty, empty)


def test_augmentation_needs_two_cases(synthetic_case):
    with pytest.raises(EmptyDataset):
        augment_by_registration([synthetic_case], IMPERFECT)


def test_augmented_cases_satisfy_invariants(small_config):
    cases = generate_dataset(3, 5, small_config)
    preset = IMPERFECT.with_overrides(levels=2, iterations=5, affine_levels=2, affine_iterations=10)
    produced = augment_by_registration(cases, preset, pair_budget=2, seed=1)
    assert 0 < len(produced) <= 2
    for case in produced:
        assert case.violations() == 0
        assert case.defect.count() > 0
        assert "_to_" in case.case_id
        assert case.metadata["preset"] == "imperfect"


@pytest.mark.slow
def test_affine_recovers_translation_and_scale(sphere_mask):
    target = sphere_mask(DIMS, 10, inner=7, center=CENTER)
    shift = np.array([5.0, 0.0, 0.0])
    source = sphere_mask(DIMS, 10.5, inner=7.35, center=CENTER + shift)
    result = fit_affine(source, target)
    assert np.allclose(result.transform.apply(CENTER), CENTER + shift, atol=0.5)
    assert np.allclose(np.diag(result.transform.matrix), 1.05, atol=0.02)
    assert result.final_mse < result.initial_mse


@pytest.mark.slow
def test_smooth_preset_is_accurate_and_invertible(sphere_mask):
    target = sphere_mask(DIMS, 10, inner=7, center=CENTER)
    source = sphere_mask(DIMS, 10, inner=6.5, center=CENTER + np.array([1.0, 0.5, 0.0]))
    result = register_pair(source, target, SMOOTH)
    assert result.mse_reduction >= 0.95
    assert invertibility(result, target) >= 0.999
    assert warp(source, result.field).count() > 0


@pytest.mark.slow
def test_imperfect_preset_reduces_mismatch(sphere_mask):
    target = sphere_mask(DIMS, 10, inner=7, center=CENTER)
    source = sphere_mask(DIMS, 10, inner=6.5, center=CENTER + np.array([1.0, 0.5, 0.0]))
    result = register_pair(source, target, IMPERFECT)
    assert result.mse_reduction >= 0.8
