import numpy as np
import pytest

from dataio.synthetic import DatasetGroup, SyntheticConfig, generate_dataset
from metrics.scores import dsc
from nnet.augment import AugmentationRanges, augment_volumes
from nnet.inference import prepare_refinement_pair, reconstruct, refine, refinement_geometry
from nnet.trainer import TrainConfig, train, train_samples, write_loss_history
from nnet.unet import UNetDescriptor, build_unet
from preprocess import clean_defect
from volume.errors import ConfigValidationError, EmptyDataset, EmptyVolume
from volume.grid import VoxelGrid, logical
from volume.morphology import dilate

TOY = UNetDescriptor(levels=2, base_channels=2, blocks_per_level=1, groups=2)


def cube(dims, lower, upper, spacing=(1.0, 1.0, 1.0)):
    data = np.zeros(dims, dtype=bool)
    data[tuple(slice(a, b) for a, b in zip(lower, upper))] = True
    return VoxelGrid.binary(data, spacing)


def test_reconstruct_keeps_geometry():
    weights = build_unet(TOY)
    defective = cube((8, 8, 8), (2, 2, 2), (6, 6, 6), spacing=(1.5, 1.5, 1.5))
    low = reconstruct(weights, defective, threshold=0.0)
    assert low.same_geometry(defective) and low.count() == 512
    assert reconstruct(weights, defective, threshold=1.0).count() == 0


def test_refinement_geometry_grows_and_clamps():
    coarse = cube((24, 24, 24), (1, 8, 8), (6, 14, 14))
    provenance = refinement_geometry(coarse, offset=2, refine_dims=(16, 16, 16))
    assert provenance.crop_lower == (0, 6, 6)
    assert provenance.crop_upper == (8, 16, 16)
    assert provenance.clamped
    assert provenance.target_dims == (16, 16, 16)
    with pytest.raises(EmptyVolume):
        refinement_geometry(VoxelGrid.binary(np.zeros((8, 8, 8))))


def test_refine_with_identity_model_restores_the_defect():
    coarse = cube((24, 24, 24), (8, 8, 8), (14, 14, 14))
    result = refine(None, coarse, offset=2, refine_dims=(16, 16, 16), model=lambda volume: volume)
    assert result.defect.same_geometry(coarse)
    assert dsc(result.defect, coarse) >= 0.9
    with pytest.raises(ValueError):
        refine(None, coarse, offset=2, refine_dims=(16, 16, 16))


def test_refinement_pair_shares_the_coarse_box():
    coarse = cube((24, 24, 24), (8, 8, 8), (14, 14, 14))
    truth = cube((24, 24, 24), (9, 8, 8), (15, 14, 14))
    inputs, targets = prepare_refinement_pair(coarse, truth, offset=2, refine_dims=(8, 8, 8))
    assert inputs.shape == targets.shape == (8, 8, 8)
    assert inputs.any() and targets.any()


def test_augmentation_is_shared_and_identity_without_ranges(rng):
    volume = np.zeros((12, 12, 12), dtype=bool)
    volume[3:7, 4:9, 5:8] = True
    still = AugmentationRanges((1.0, 1.0), (0.0, 0.0), (0.0, 0.0))
    assert np.array_equal(augment_volumes([volume], rng, still)[0], volume)
    a, b = augment_volumes([volume, volume], rng)
    assert np.array_equal(a, b)


def test_train_config_validation():
    with pytest.raises(ConfigValidationError):
        TrainConfig(decay=0.9)
    with pytest.raises(ConfigValidationError):
        TrainConfig(batch_size=0)
    assert TrainConfig(initial_lr=0.01, decay=0.95).lr(2) == pytest.approx(0.01 * 0.95 ** 2)


def test_training_reduces_loss_and_logs_history(tmp_path):
    target = np.zeros((8, 8, 8), dtype=bool)
    target[2:6, 2:6, 2:6] = True
    samples = [(~target, target)] * 2
    config = TrainConfig(batch_size=2, cases_per_iteration=2, initial_lr=0.01, augment=False,
                         epochs=15, patience=15, precision="float64")
    seen = []
    result = train_samples(build_unet(TOY, seed=0), samples, config, on_epoch=seen.append)
    losses = [record.train_loss for record in result.history]
    assert len(seen) == len(result.history) <= 15
    assert min(losses) < losses[0]
    assert result.best_epoch == int(np.argmin(losses))
    lines = write_loss_history(result.history, tmp_path / "loss.csv").read_text().splitlines()
    assert lines[0] == "epoch,lr,train_loss,val_loss"
    assert len(lines) == len(result.history) + 1


def test_training_needs_cases():
    with pytest.raises(EmptyDataset):
        train_samples(build_unet(TOY), [], TrainConfig(epochs=1))


def test_training_on_case_records(synthetic_case):
    config = TrainConfig(batch_size=1, cases_per_iteration=1, augment=False, epochs=3, patience=1,
                         initial_lr=1e-12, decay=0.95)
    result = train(build_unet(TOY), [synthetic_case], config)
    assert 1 <= len(result.history) <= 3


@pytest.mark.slow
def test_trained_refinement_does_not_degrade_held_out_defects():
    """A refinement network trained on over-segmented defects keeps or improves DSC on unseen cases."""
    config = SyntheticConfig.for_group(DatasetGroup.UNIFORM, shell_radius_mm=22.0, thickness_mm=4.0,
                                       dims=(28, 24, 28), spacing=(2.0, 2.0, 2.0))
    cases = generate_dataset(10, 5, config)
    # coarse predictions in the original frame: one voxel too thick, never on the skull
    coarse = {c.case_id: logical(dilate(c.defect, 1), c.defective, "and_not") for c in cases}
    offset, dims = 2, (16, 16, 16)
    train_cases, held_out = cases[:8], cases[8:]
    samples = [prepare_refinement_pair(coarse[c.case_id], c.defect, offset, dims) for c in train_cases]
    settings = TrainConfig(batch_size=2, cases_per_iteration=8, initial_lr=0.01, augment=False,
                           epochs=60, patience=60, seed=3)
    descriptor = UNetDescriptor(levels=2, base_channels=4, blocks_per_level=1, groups=2)
    weights = train_samples(build_unet(descriptor, seed=3), samples, settings).weights

    before, after = [], []
    for case in held_out:
        result = refine(weights, coarse[case.case_id], offset, dims)
        refined = clean_defect(result.defect, case.defective, closing_radius=0, keep_components=1)
        assert refined.same_geometry(case.defect)
        before.append(dsc(coarse[case.case_id], case.defect))
        after.append(dsc(refined, case.defect))
    assert np.mean(after) >= np.mean(before) - 0.01
