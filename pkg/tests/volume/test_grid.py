import numpy as np
import pytest

from volume.errors import EmptyVolume, GeometryMismatch
from volume.grid import (
    BoundingBox, Interpolation, PayloadKind, VoxelGrid, bounding_box, centroid, crop,
    crop_pad, distance_transform, logical, resample, resize, translate, uncrop_pad,
)


def test_binary_payload_is_read_only():
    """Grids never expose a writable payload."""
    grid = VoxelGrid.binary(np.zeros((4, 4, 4), dtype=np.uint8))
    assert grid.data.dtype == bool
    with pytest.raises(ValueError):
        grid.data[0, 0, 0] = True


def test_binary_rejects_non_mask_values():
    with pytest.raises(ValueError):
        VoxelGrid.binary(np.full((2, 2, 2), 3))


def test_vector_shape_is_checked():
    with pytest.raises(ValueError):
        VoxelGrid.vector(np.zeros((2, 4, 4, 4)))
    assert VoxelGrid.vector(np.zeros((3, 4, 5, 6))).dims == (4, 5, 6)


def test_bounding_box_is_tight():
    data = np.zeros((10, 10, 10), dtype=bool)
    data[2:5, 3, 7:9] = True
    box = bounding_box(VoxelGrid.binary(data))
    assert box.lower == (2, 3, 7)
    assert box.upper == (5, 4, 9)
    assert box.extent == (3, 1, 2)


def test_bounding_box_of_empty_grid_raises():
    with pytest.raises(EmptyVolume):
        bounding_box(VoxelGrid.binary(np.zeros((3, 3, 3))))


def test_crop_moves_origin():
    grid = VoxelGrid.binary(np.ones((6, 6, 6)), spacing=(2.0, 1.0, 0.5), origin=(10.0, 0.0, 0.0))
    region = crop(grid, BoundingBox((1, 2, 4), (3, 5, 6)))
    assert region.dims == (2, 3, 2)
    assert region.origin == (12.0, 2.0, 2.0)


def test_crop_pad_round_trip_is_identity(rng):
    """Without overflow the inverse restores every voxel."""
    data = np.zeros((20, 18, 16), dtype=bool)
    data[5:12, 4:10, 6:11] = rng.random((7, 6, 5)) > 0.4
    grid = VoxelGrid.binary(data, spacing=(1.5, 1.5, 1.5), origin=(3.0, -2.0, 1.0))
    placed, provenance = crop_pad(grid, bounding_box(grid), 2, (16, 16, 16))
    assert not provenance.overflow_flag
    assert placed.count() == grid.count()
    assert uncrop_pad(placed, provenance).equals(grid)


def test_crop_pad_keeps_protruding_content_within_offset():
    """Content up to ``offset`` voxels outside the skull box survives the crop."""
    skull = np.zeros((30, 30, 30), dtype=bool)
    skull[10:20, 10:20, 10:20] = True
    grid = VoxelGrid.binary(skull)
    defect = np.zeros_like(skull)
    defect[14:16, 14:16, 20:25] = True
    _, provenance = crop_pad(grid, bounding_box(grid), 5, (24, 24, 24))
    placed_defect, _ = crop_pad(VoxelGrid.binary(defect), bounding_box(grid), 5, (24, 24, 24))
    assert placed_defect.count() == int(defect.sum())
    assert provenance.crop_upper[2] == 25


def test_crop_pad_flags_overflow():
    data = np.ones((10, 10, 10), dtype=bool)
    placed, provenance = crop_pad(VoxelGrid.binary(data), BoundingBox((0, 0, 0), (10, 10, 10)), 0, (6, 6, 6))
    assert provenance.overflow_flag
    assert placed.dims == (6, 6, 6)


def test_uncrop_pad_requires_target_dims():
    grid = VoxelGrid.binary(np.ones((4, 4, 4)))
    _, provenance = crop_pad(grid, bounding_box(grid), 0, (6, 6, 6))
    with pytest.raises(GeometryMismatch):
        uncrop_pad(VoxelGrid.binary(np.ones((5, 5, 5))), provenance)


def test_provenance_dict_round_trip():
    grid = VoxelGrid.binary(np.ones((4, 5, 6)), spacing=(1.0, 2.0, 3.0))
    _, provenance = crop_pad(grid, bounding_box(grid), 1, (8, 8, 8))
    assert type(provenance).from_dict(provenance.to_dict()) == provenance


def test_resample_keeps_physical_extent():
    grid = VoxelGrid.binary(np.ones((10, 20, 30)), spacing=(1.0, 1.0, 1.0))
    coarse = resample(grid, (2.0, 2.0, 2.0))
    assert coarse.dims == (5, 10, 15)
    assert np.allclose(coarse.physical_extent(), grid.physical_extent())
    assert coarse.count() == coarse.data.size


def test_resize_trilinear_scalar():
    grid = VoxelGrid.scalar(np.ones((4, 4, 4)))
    resized = resize(grid, (8, 8, 8), Interpolation.TRILINEAR)
    assert resized.dims == (8, 8, 8)
    assert np.allclose(resized.data, 1.0)
    assert resized.spacing == (0.5, 0.5, 0.5)


def test_translate_shifts_by_whole_voxels():
    data = np.zeros((8, 8, 8), dtype=bool)
    data[2, 2, 2] = True
    moved = translate(VoxelGrid.binary(data, spacing=(2.0, 2.0, 2.0)), (4.0, 0.0, -2.0))
    assert np.argwhere(moved.data).tolist() == [[4, 2, 1]]


def test_logical_ops_and_identity(rng):
    a = VoxelGrid.binary(rng.random((6, 6, 6)) > 0.3)
    b = a.with_data(a.data & (rng.random((6, 6, 6)) > 0.5))
    assert logical(a, b, "and_not").equals(logical(a, b, "xor"))
    assert logical(a, b, "or").equals(a)
    with pytest.raises(ValueError):
        logical(a, b, "nand")


def test_logical_requires_same_geometry():
    a = VoxelGrid.binary(np.ones((3, 3, 3)))
    b = VoxelGrid.binary(np.ones((3, 3, 3)), spacing=(2.0, 1.0, 1.0))
    with pytest.raises(GeometryMismatch):
        logical(a, b, "and")


def test_distance_transform_matches_brute_force(rng):
    mask = rng.random((7, 6, 5)) > 0.85
    mask[0, 0, 0] = True
    spacing = (1.0, 2.0, 0.5)
    grid = VoxelGrid.binary(mask, spacing=spacing)
    result = distance_transform(grid).data
    points = np.argwhere(mask) * np.asarray(spacing)
    for index in np.ndindex(mask.shape):
        expected = np.min(np.linalg.norm(points - np.asarray(index) * np.asarray(spacing), axis=1))
        assert result[index] == pytest.approx(expected)


def test_distance_transform_of_empty_grid_is_infinite():
    result = distance_transform(VoxelGrid.binary(np.zeros((3, 3, 3))))
    assert result.kind is PayloadKind.SCALAR
    assert np.isinf(result.data).all()


def test_centroid_in_millimeters():
    data = np.zeros((5, 5, 5), dtype=bool)
    data[1, 1, 1] = data[3, 1, 1] = True
    assert centroid(VoxelGrid.binary(data, spacing=(2.0, 1.0, 1.0), origin=(1.0, 0.0, 0.0))).tolist() == [5.0, 1.0, 1.0]
