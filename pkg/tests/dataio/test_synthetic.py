import pytest

from dataio.synthetic import DatasetGroup, DefectType, SyntheticConfig, generate_dataset, generate_synthetic_case
from volume.errors import DegenerateConfig


@pytest.mark.parametrize("defect_type", list(DefectType))
def test_every_defect_type_yields_valid_case(small_config, defect_type):
    config = SyntheticConfig(shell_radius_mm=22.0, thickness_mm=4.0, dims=small_config.dims,
                             spacing=small_config.spacing, defect_type=defect_type, defect_fraction=0.1)
    record = generate_synthetic_case(5, config)
    assert record.violations() == 0
    assert record.defect.count() > 0
    assert record.defective.count() > 0
    assert record.metadata["defect_type"] == defect_type.value


def test_generation_is_deterministic(small_config):
    a = generate_synthetic_case(7, small_config)
    b = generate_synthetic_case(7, small_config)
    c = generate_synthetic_case(8, small_config)
    assert a.complete.equals(b.complete) and a.defect.equals(b.defect)
    assert not a.defect.equals(c.defect)


def test_defect_fraction_is_roughly_honored(small_config):
    record = generate_synthetic_case(2, small_config)
    ratio = record.defect.count() / record.complete.count()
    assert 0.02 < ratio < 0.3


def test_group_datasets_use_group_prefix(small_config):
    config = SyntheticConfig.for_group(DatasetGroup.UNIFORM, shell_radius_mm=22.0, thickness_mm=4.0,
                                       dims=small_config.dims, spacing=small_config.spacing)
    records = generate_dataset(3, 1, config)
    assert [r.case_id for r in records] == ["uniform_000", "uniform_001", "uniform_002"]
    assert all(r.metadata["defect_type"] == "spherical_cap" for r in records)
    assert all(r.metadata["group"] == "uniform" for r in records)


def test_thickness_must_be_below_radius():
    with pytest.raises(DegenerateConfig):
        generate_synthetic_case(0, SyntheticConfig(shell_radius_mm=5.0, thickness_mm=6.0))


def test_defect_fraction_range():
    with pytest.raises(DegenerateConfig):
        generate_synthetic_case(0, SyntheticConfig(defect_fraction=0.9))
