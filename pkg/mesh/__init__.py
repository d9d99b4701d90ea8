"""
Printing preparation: surface extraction, smoothing, cleanup, STL export.
"""

from mesh.chain import MeshConfig, voxels_to_mesh
from mesh.clip import cap_fan, clip_half
from mesh.smoothing import clean_mesh, sinc_smooth, taubin_coefficients
from mesh.stl_io import read_stl, write_stl
from mesh.surface import TriangleMesh, empty_mesh, extract_isosurface, gaussian_smooth

__all__ = [
    "MeshConfig", "voxels_to_mesh", "cap_fan", "clip_half",
    "clean_mesh", "sinc_smooth", "taubin_coefficients", "read_stl", "write_stl",
    "TriangleMesh", "empty_mesh", "extract_isosurface", "gaussian_smooth",
]
