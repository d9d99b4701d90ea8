"""
STL codec: binary (default) or ASCII, via trimesh's exporters.
"""

import logging
import struct
from pathlib import Path
from typing import Union

import numpy as np
import trimesh
from trimesh.exchange import stl

from mesh.surface import TriangleMesh
from volume.errors import CorruptFile, MissingFile

logger = logging.getLogger(__name__)

HEADER_BYTES = 80
RECORD_BYTES = 50


def write_stl(mesh: TriangleMesh, path: Union[str, Path], ascii: bool = False) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if ascii:
        path.write_text(stl.export_stl_ascii(mesh))
    else:
        path.write_bytes(stl.export_stl(mesh))
    logger.info(f"Wrote STL {path} ({len(mesh.faces)} triangles, {'ascii' if ascii else 'binary'})")
    return path


def _is_binary(raw: bytes) -> bool:
    if len(raw) < HEADER_BYTES + 4:
        return False
    (count,) = struct.unpack_from("<I", raw, HEADER_BYTES)
    return len(raw) == HEADER_BYTES + 4 + RECORD_BYTES * count


def read_stl(path: Union[str, Path]) -> TriangleMesh:
    """Triangle soup as stored: three vertices per triangle, no merging."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"STL file not found: {path}")
    raw = path.read_bytes()
    if not _is_binary(raw) and not raw.lstrip().startswith(b"solid"):
        raise CorruptFile(f"{path}: neither a complete binary STL nor ASCII STL")
    try:
        with path.open("rb") as handle:
            loaded = stl.load_stl(handle)
    except (stl.HeaderError, ValueError, IndexError, UnicodeDecodeError, struct.error) as e:
        raise CorruptFile(f"{path}: unreadable STL: {e}") from e
    vertices = np.asarray(loaded["vertices"], dtype=np.float64)
    faces = np.asarray(loaded["faces"], dtype=np.int64)
    if faces.size and faces.max() >= len(vertices):
        raise CorruptFile(f"{path}: triangle indices out of range")
    return trimesh.Trimesh(vertices=vertices, faces=faces, process=False)
