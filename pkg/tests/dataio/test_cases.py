import numpy as np
import pytest

from dataio.cases import CaseRecord, read_case, write_case
from dataio.manifest import dataset_manifest, parse_ratio, split
from dataio.nrrd_io import write_nrrd
from volume.errors import CaseInvariantViolation, CorruptFile, EmptyDataset, GeometryMismatch, MissingFile
from volume.grid import VoxelGrid


def _record(complete, defect, case_id="c1"):
    return CaseRecord.from_defect(VoxelGrid.binary(complete), VoxelGrid.binary(defect), case_id)


def test_from_defect_satisfies_invariants():
    complete = np.zeros((6, 6, 6), dtype=bool)
    complete[1:5, 1:5, 1:5] = True
    defect = np.zeros_like(complete)
    defect[3:6, 3:6, 3:6] = True
    record = _record(complete, defect).validate()
    assert record.violations() == 0
    assert not (record.defective.data & record.defect.data).any()
    assert np.array_equal(record.defective.data | record.defect.data, complete)


def test_validate_rejects_overlap():
    mask = np.ones((3, 3, 3), dtype=bool)
    record = CaseRecord(VoxelGrid.binary(mask), VoxelGrid.binary(mask), VoxelGrid.binary(mask), "bad")
    with pytest.raises(CaseInvariantViolation, match="case=bad"):
        record.validate()


def test_validate_loaded_corrects_small_violations():
    complete = np.zeros((10, 10, 10), dtype=bool)
    complete[:, :, :5] = True
    defect = np.zeros_like(complete)
    defect[:, :, 4] = True
    defective = complete & ~defect
    defect_noisy = defect.copy()
    defect_noisy[0, 0, 0] = True
    record = CaseRecord(VoxelGrid.binary(complete), VoxelGrid.binary(defective),
                        VoxelGrid.binary(defect_noisy), "noisy")
    fixed = record.validate_loaded(tolerance=0.01)
    assert fixed.violations() == 0
    assert fixed.defect.count() == defect.sum()


def test_validate_loaded_raises_beyond_tolerance():
    mask = np.ones((4, 4, 4), dtype=bool)
    record = CaseRecord(VoxelGrid.binary(mask), VoxelGrid.binary(mask), VoxelGrid.binary(mask), "c")
    with pytest.raises(CaseInvariantViolation):
        record.validate_loaded(tolerance=0.01)


def test_geometry_mismatch_names_case():
    record = CaseRecord(None, VoxelGrid.binary(np.ones((3, 3, 3))),
                        VoxelGrid.binary(np.zeros((4, 3, 3))), "geo")
    with pytest.raises(GeometryMismatch, match="case=geo"):
        record.validate()


def test_case_directory_round_trip(tmp_path, synthetic_case):
    case_dir = write_case(synthetic_case, tmp_path)
    assert sorted(p.name for p in case_dir.iterdir()) == ["case.json", "complete.nrrd", "defect.nrrd",
                                                           "defective.nrrd"]
    loaded = read_case(case_dir)
    assert loaded.case_id == synthetic_case.case_id
    assert loaded.metadata == synthetic_case.metadata
    for name in ("complete", "defective", "defect"):
        assert getattr(loaded, name).equals(getattr(synthetic_case, name))


def test_inference_case_without_defect(tmp_path, synthetic_case):
    record = CaseRecord(None, synthetic_case.defective, None, "query")
    case_dir = write_case(record, tmp_path)
    with pytest.raises(MissingFile, match="defect.nrrd"):
        read_case(case_dir)
    loaded = read_case(case_dir, require_defect=False)
    assert loaded.defect is None and loaded.complete is None


def test_non_binary_mask_is_a_data_error(tmp_path, synthetic_case):
    case_dir = write_case(synthetic_case, tmp_path)
    scaled = synthetic_case.defective.data.astype(np.uint8) * 255
    write_nrrd(VoxelGrid.scalar(scaled, synthetic_case.defective.spacing, synthetic_case.defective.origin),
               case_dir / "defective.nrrd")
    with pytest.raises(CorruptFile, match=r"defective\.nrrd is not a 0/1 mask.*case=") as excinfo:
        read_case(case_dir)
    assert excinfo.value.exit_code == 3


def test_manifest_lists_cases_in_order(case_dir):
    references = dataset_manifest(case_dir)
    assert [r.case_id for r in references] == sorted(r.case_id for r in references)
    assert len(references) == 6
    assert all(r.has_defect for r in references)


def test_manifest_of_missing_directory(tmp_path):
    with pytest.raises(MissingFile):
        dataset_manifest(tmp_path / "nowhere")


def test_parse_ratio():
    assert parse_ratio("9:1") == pytest.approx(0.9)
    assert parse_ratio(0.75) == 0.75
    with pytest.raises(ValueError):
        parse_ratio(1.5)
    with pytest.raises(ValueError):
        parse_ratio("0:0")


def test_split_is_seeded_and_disjoint():
    items = list(range(20))
    train, val = split(items, "9:1", seed=4)
    assert len(train) == 18 and len(val) == 2
    assert sorted(train + val) == items
    assert split(items, "9:1", seed=4) == (train, val)
    assert split(items, "9:1", seed=5) != (train, val)


def test_split_keeps_one_training_case():
    assert split(["a"], 0.1, seed=0) == (["a"], [])
    with pytest.raises(EmptyDataset):
        split([], 0.9)
