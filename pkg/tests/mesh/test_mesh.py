import numpy as np
import pytest
import trimesh

from mesh import (
    MeshConfig, clean_mesh, clip_half, extract_isosurface, read_stl, sinc_smooth, taubin_coefficients,
    voxels_to_mesh, write_stl,
)
from volume.errors import ConfigValidationError, CorruptFile, EmptyVolume, MissingFile
from volume.grid import VoxelGrid

RADIUS = 10.0


@pytest.fixture
def ball_mesh(sphere_mask):
    return voxels_to_mesh(sphere_mask((28, 28, 28), RADIUS), MeshConfig(min_component_triangles=0))


def test_ball_surface_is_a_closed_sphere(ball_mesh):
    assert ball_mesh.is_watertight
    assert ball_mesh.euler_number == 2
    assert ball_mesh.area == pytest.approx(4 * np.pi * RADIUS ** 2, rel=0.05)
    assert ball_mesh.volume == pytest.approx(4 / 3 * np.pi * RADIUS ** 3, rel=0.05)


def test_vertices_are_in_millimetres(sphere_mask):
    spacing = (2.0, 2.0, 2.0)
    grid = sphere_mask((20, 20, 20), 5, spacing=spacing)
    grid = VoxelGrid.binary(grid.data, spacing, origin=(10.0, 0.0, 0.0))
    mesh = voxels_to_mesh(grid, MeshConfig(min_component_triangles=0))
    center = 10.0 + 9.5 * 2.0, 9.5 * 2.0, 9.5 * 2.0
    assert np.allclose(mesh.bounds.mean(axis=0), center, atol=1.0)
    assert mesh.area == pytest.approx(4 * np.pi * 10.0 ** 2, rel=0.12)


def test_empty_inputs():
    with pytest.raises(EmptyVolume):
        voxels_to_mesh(VoxelGrid.binary(np.zeros((6, 6, 6))))
    assert len(extract_isosurface(VoxelGrid.scalar(np.full((4, 4, 4), 0.2))).faces) == 0
    with pytest.raises(ConfigValidationError):
        MeshConfig(iso=1.0)


def test_binary_stl_layout_and_round_trip(ball_mesh, tmp_path):
    path = write_stl(ball_mesh, tmp_path / "ball.stl")
    assert path.stat().st_size == 84 + 50 * len(ball_mesh.faces)
    loaded = read_stl(path)
    assert len(loaded.faces) == len(ball_mesh.faces)
    assert np.allclose(np.sort(loaded.vertices, axis=0)[[0, -1]],
                       np.sort(ball_mesh.vertices, axis=0)[[0, -1]], atol=1e-4)


def test_ascii_stl(ball_mesh, tmp_path):
    path = write_stl(ball_mesh, tmp_path / "ball.stl", ascii=True)
    assert path.read_text().lstrip().startswith("solid")
    assert len(read_stl(path).faces) == len(ball_mesh.faces)


def test_bad_stl_files(ball_mesh, tmp_path):
    with pytest.raises(MissingFile):
        read_stl(tmp_path / "absent.stl")
    broken = tmp_path / "broken.stl"
    broken.write_bytes(b"\x00" * 40)
    with pytest.raises(CorruptFile):
        read_stl(broken)


def test_clip_gives_two_closed_halves(ball_mesh):
    lower, upper = clip_half(ball_mesh, axis=2)
    for half in (lower, upper):
        assert len(half.faces) > 0
        assert half.is_watertight
    assert lower.bounds[1, 2] <= ball_mesh.bounds[:, 2].mean() + 1e-6
    assert upper.bounds[0, 2] >= ball_mesh.bounds[:, 2].mean() - 1e-6
    assert lower.volume + upper.volume == pytest.approx(ball_mesh.volume, rel=0.02)
    with pytest.raises(ValueError):
        clip_half(ball_mesh, axis=3)


def test_clean_drops_small_components():
    big = trimesh.creation.icosphere(subdivisions=2, radius=5.0)
    small = trimesh.creation.icosphere(subdivisions=0, radius=1.0)
    small.apply_translation([20.0, 0.0, 0.0])
    both = trimesh.util.concatenate([big, small])
    cleaned = clean_mesh(both, min_component_triangles=50)
    assert len(cleaned.faces) == len(big.faces)
    assert len(clean_mesh(both, min_component_triangles=0).faces) == len(both.faces)


def test_taubin_pair_and_smoothing_keep_connectivity(ball_mesh):
    lamb, nu = taubin_coefficients(0.1)
    assert 1 / lamb - 1 / nu == pytest.approx(0.1)
    with pytest.raises(ValueError):
        taubin_coefficients(0.0)
    smoothed = sinc_smooth(ball_mesh, iterations=5)
    assert np.array_equal(smoothed.faces, ball_mesh.faces)
    assert np.array_equal(sinc_smooth(ball_mesh, iterations=0).vertices, ball_mesh.vertices)
