import numpy as np
import pytest

from volume.grid import VoxelGrid
from volume.morphology import (
    ball, close, connected_components, contour, dilate, erode, keep_largest, median_filter, morphology,
)


def _flood_fill_sizes(mask: np.ndarray):
    """Reference 26-connected component sizes by explicit breadth-first search."""
    seen = np.zeros_like(mask, dtype=bool)
    sizes = []
    offsets = [(i, j, k) for i in (-1, 0, 1) for j in (-1, 0, 1) for k in (-1, 0, 1) if (i, j, k) != (0, 0, 0)]
    for start in zip(*np.nonzero(mask)):
        if seen[start]:
            continue
        seen[start] = True
        queue, size = [start], 0
        while queue:
            voxel = queue.pop()
            size += 1
            for offset in offsets:
                n = tuple(v + o for v, o in zip(voxel, offset))
                if all(0 <= c < d for c, d in zip(n, mask.shape)) and mask[n] and not seen[n]:
                    seen[n] = True
                    queue.append(n)
        sizes.append(size)
    return sorted(sizes, reverse=True)


def test_ball_radius_one_is_six_neighborhood():
    element = ball(1)
    assert element.shape == (3, 3, 3)
    assert element.sum() == 7


def test_ball_rejects_zero_radius():
    with pytest.raises(ValueError):
        ball(0)


def test_erode_then_dilate_single_voxel():
    data = np.zeros((7, 7, 7), dtype=bool)
    data[3, 3, 3] = True
    grid = VoxelGrid.binary(data)
    assert dilate(grid, 1).count() == 7
    assert erode(grid, 1).count() == 0


def test_close_fills_small_hole_away_from_border():
    data = np.zeros((12, 12, 12), dtype=bool)
    data[2:10, 2:10, 2:10] = True
    data[5, 5, 5] = False
    closed = close(VoxelGrid.binary(data), 1)
    assert closed.data[5, 5, 5]
    assert closed.count() == 8 ** 3


def test_close_does_not_erode_at_grid_border():
    grid = VoxelGrid.binary(np.ones((5, 5, 5)))
    assert close(grid, 2).count() == 125


def test_morphology_dispatch_validates():
    grid = VoxelGrid.binary(np.ones((3, 3, 3)))
    with pytest.raises(ValueError):
        morphology(grid, "thin", 1)
    with pytest.raises(ValueError):
        morphology(grid, "erode", 0)


def test_contour_of_cube_is_its_shell():
    data = np.zeros((8, 8, 8), dtype=bool)
    data[1:7, 1:7, 1:7] = True
    assert contour(VoxelGrid.binary(data)).count() == 6 ** 3 - 4 ** 3


def test_connected_components_match_flood_fill(rng):
    for _ in range(5):
        mask = rng.random((9, 8, 7)) > 0.7
        labels, sizes = connected_components(VoxelGrid.binary(mask))
        assert sizes == _flood_fill_sizes(mask)
        assert int(labels.data.max()) == len(sizes)
        for label, size in enumerate(sizes, start=1):
            assert int((labels.data == label).sum()) == size


def test_six_connectivity_splits_diagonal_pair():
    data = np.zeros((3, 3, 3), dtype=bool)
    data[0, 0, 0] = data[1, 1, 1] = True
    grid = VoxelGrid.binary(data)
    assert connected_components(grid, 26)[1] == [2]
    assert connected_components(grid, 6)[1] == [1, 1]


def test_keep_largest_keeps_k_components():
    data = np.zeros((12, 4, 4), dtype=bool)
    data[0:4, 0:2, 0:2] = True
    data[6:7, 0, 0] = True
    data[9:11, 0:2, 0] = True
    grid = VoxelGrid.binary(data)
    assert keep_largest(grid, 1).count() == 16
    assert keep_largest(grid, 2).count() == 20
    assert keep_largest(grid, 5).count() == 21


def test_median_filter_removes_isolated_voxel_and_keeps_full_grid():
    data = np.zeros((5, 5, 5), dtype=bool)
    data[2, 2, 2] = True
    assert median_filter(VoxelGrid.binary(data)).count() == 0
    full = VoxelGrid.binary(np.ones((4, 4, 4)))
    assert median_filter(full).count() == 64


def _majority_oracle(mask: np.ndarray, radius: int) -> np.ndarray:
    """Per-voxel majority among the in-grid voxels of the (2r+1)^3 cube."""
    out = np.zeros_like(mask)
    for index in np.ndindex(mask.shape):
        window = tuple(slice(max(i - radius, 0), i + radius + 1) for i in index)
        votes = mask[window]
        out[index] = 2 * np.count_nonzero(votes) > votes.size
    return out


@pytest.mark.parametrize("radius", [1, 2])
def test_median_filter_matches_in_grid_majority(rng, radius):
    mask = rng.random((12, 12, 12)) < 0.5
    assert np.array_equal(median_filter(VoxelGrid.binary(mask), radius).data, _majority_oracle(mask, radius))


def test_median_filter_keeps_slabs_touching_the_border():
    """Out-of-grid voxels do not vote, so a slab along a face is not eaten at its edges."""
    data = np.zeros((6, 6, 6), dtype=bool)
    data[:, :, :2] = True
    assert np.array_equal(median_filter(VoxelGrid.binary(data)).data, data)
