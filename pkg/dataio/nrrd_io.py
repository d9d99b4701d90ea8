"""
NRRD volume codec for the subset the challenge data uses: 3-D, uint8 /
int16 / float32 samples, raw or gzip encoding, diagonal space directions.
"""

import logging
from pathlib import Path
from typing import Optional, Union

import nrrd
import numpy as np

from volume.errors import CorruptFile, MissingFile, UnsupportedNrrdFeature
from volume.grid import PayloadKind, VoxelGrid

logger = logging.getLogger(__name__)

SUPPORTED_DTYPES = {np.dtype(np.uint8), np.dtype(np.int16), np.dtype(np.float32)}
SUPPORTED_ENCODINGS = {"raw", "gzip", "gz"}

PathLike = Union[str, Path]


def _spacing_from_header(header: dict, path: Path):
    directions = header.get("space directions")
    if directions is not None:
        matrix = np.asarray(directions, dtype=np.float64)
        if matrix.shape != (3, 3) or not np.all(np.isfinite(matrix)):
            raise UnsupportedNrrdFeature(f"{path}: space directions must be a finite 3x3 matrix")
        off_diagonal = matrix - np.diag(np.diag(matrix))
        if np.any(np.abs(off_diagonal) > 1e-9):
            raise UnsupportedNrrdFeature(f"{path}: non-diagonal space directions are not supported")
        spacing = np.diag(matrix)
    elif header.get("spacings") is not None:
        spacing = np.asarray(header["spacings"], dtype=np.float64)
    else:
        spacing = np.ones(3)
    if spacing.shape != (3,) or np.any(spacing <= 0):
        raise UnsupportedNrrdFeature(f"{path}: spacing must be 3 positive values, got {spacing.tolist()}")
    return tuple(float(s) for s in spacing)


def read_nrrd(path: PathLike, kind: Optional[PayloadKind] = None) -> VoxelGrid:
    """Read a volume. ``uint8`` files holding only 0/1 load as binary grids
    unless ``kind`` says otherwise."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"NRRD file not found: {path}")
    try:
        header = nrrd.read_header(str(path))
    except (nrrd.NRRDError, OSError, ValueError) as e:
        raise CorruptFile(f"{path}: unreadable NRRD header: {e}") from e
    if int(header.get("dimension", 0)) != 3:
        raise UnsupportedNrrdFeature(f"{path}: only 3-D volumes are supported, got dimension {header.get('dimension')}")
    encoding = str(header.get("encoding", "raw")).lower()
    if encoding not in SUPPORTED_ENCODINGS:
        raise UnsupportedNrrdFeature(f"{path}: encoding '{encoding}' is not supported")
    spacing = _spacing_from_header(header, path)
    origin = header.get("space origin")
    origin = (0.0, 0.0, 0.0) if origin is None else tuple(float(v) for v in np.asarray(origin).ravel())
    try:
        data, _ = nrrd.read(str(path), index_order="F")
    except (nrrd.NRRDError, OSError, ValueError, EOFError) as e:
        raise CorruptFile(f"{path}: unreadable NRRD payload: {e}") from e
    if data.dtype.newbyteorder("=") not in SUPPORTED_DTYPES:
        raise UnsupportedNrrdFeature(f"{path}: sample type {data.dtype} is not supported")
    data = data.astype(data.dtype.newbyteorder("="), copy=False)
    if kind is None:
        is_mask = data.dtype == np.uint8 and np.isin(np.unique(data), (0, 1)).all()
        kind = PayloadKind.BINARY if is_mask else PayloadKind.SCALAR
    if kind is PayloadKind.VECTOR:
        raise UnsupportedNrrdFeature(f"{path}: vector payloads are not stored as NRRD")
    logger.debug(f"Read {path} dims={data.shape} spacing={spacing} kind={kind.value}")
    return VoxelGrid(data, spacing, origin, kind)


def write_nrrd(grid: VoxelGrid, path: PathLike, encoding: str = "gzip",
               dtype: Optional[np.dtype] = None) -> Path:
    """Write a binary or scalar grid. Binary grids are stored as ``uint8``,
    scalar grids keep ``int16``/``float32`` and anything else becomes ``float32``."""
    path = Path(path)
    if encoding not in ("raw", "gzip"):
        raise UnsupportedNrrdFeature(f"encoding '{encoding}' is not supported")
    if grid.kind is PayloadKind.VECTOR:
        raise UnsupportedNrrdFeature("vector payloads are not stored as NRRD")
    if dtype is None:
        if grid.kind is PayloadKind.BINARY:
            dtype = np.uint8
        elif grid.data.dtype in SUPPORTED_DTYPES:
            dtype = grid.data.dtype
        else:
            dtype = np.float32
    dtype = np.dtype(dtype)
    if dtype not in SUPPORTED_DTYPES:
        raise UnsupportedNrrdFeature(f"sample type {dtype} is not supported")
    data = np.ascontiguousarray(grid.data.astype(dtype.newbyteorder("<")))
    header = {
        "type": {"uint8": "uint8", "int16": "int16", "float32": "float"}[dtype.name],
        "dimension": 3,
        "space": "left-posterior-superior",
        "space directions": np.diag(grid.spacing),
        "space origin": np.asarray(grid.origin, dtype=np.float64),
        "kinds": ["domain", "domain", "domain"],
        "encoding": encoding,
        "endian": "little",
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    nrrd.write(str(path), data, header=header, index_order="F")
    logger.debug(f"Wrote {path} dims={grid.dims} encoding={encoding} type={dtype.name}")
    return path
