"""
Core voxel-grid type and the lattice operations the other packages consume.

Coordinate convention: voxel index (i, j, k) sits at the physical position
``origin + (i, j, k) * spacing`` (millimeters). A grid covers the cells
centered on those positions, so a resample keeps the outer cell faces fixed.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy import ndimage

from volume.errors import EmptyVolume, GeometryMismatch

logger = logging.getLogger(__name__)

Vec3 = Tuple[float, float, float]
Index3 = Tuple[int, int, int]


class PayloadKind(Enum):
    BINARY = "binary"
    SCALAR = "scalar"
    VECTOR = "vector"


class Interpolation(Enum):
    NEAREST = "nearest"
    TRILINEAR = "trilinear"

    @property
    def order(self) -> int:
        return 0 if self is Interpolation.NEAREST else 1


def _as_vec3(values: Sequence[float], name: str) -> Vec3:
    vec = tuple(float(v) for v in values)
    if len(vec) != 3:
        raise ValueError(f"{name} must have 3 components, got {len(vec)}")
    return vec  # type: ignore[return-value]


@dataclass(frozen=True, eq=False)
class VoxelGrid:
    """Axis-aligned 3-D lattice with physical spacing and origin.

    Binary payloads are stored as ``bool``, scalar payloads as floating point
    and vector payloads as ``(3, D, H, W)`` floating point. The payload array
    is marked read-only; operations always return new grids.
    """
    data: np.ndarray
    spacing: Vec3 = (1.0, 1.0, 1.0)
    origin: Vec3 = (0.0, 0.0, 0.0)
    kind: PayloadKind = PayloadKind.SCALAR

    def __post_init__(self):
        spacing = _as_vec3(self.spacing, "spacing")
        origin = _as_vec3(self.origin, "origin")
        if any(s <= 0 for s in spacing):
            raise ValueError(f"spacing must be positive, got {spacing}")
        data = np.asarray(self.data)
        if self.kind is PayloadKind.BINARY:
            if data.dtype != np.bool_:
                if data.size and not np.isin(np.unique(data), (0, 1)).all():
                    raise ValueError("binary payload must contain only 0 and 1")
                data = data.astype(bool)
            expected_ndim = 3
        elif self.kind is PayloadKind.SCALAR:
            if not np.issubdtype(data.dtype, np.floating):
                data = data.astype(np.float64)
            expected_ndim = 3
        else:
            if not np.issubdtype(data.dtype, np.floating):
                data = data.astype(np.float64)
            expected_ndim = 4
            if data.ndim != 4 or data.shape[0] != 3:
                raise ValueError(f"vector payload must have shape (3, D, H, W), got {data.shape}")
        if data.ndim != expected_ndim:
            raise ValueError(f"{self.kind.value} payload must be {expected_ndim}-D, got {data.ndim}-D")
        if any(d < 1 for d in data.shape):
            raise ValueError(f"grid dims must be positive, got {data.shape}")
        view = data.view()
        view.flags.writeable = False
        object.__setattr__(self, "data", view)
        object.__setattr__(self, "spacing", spacing)
        object.__setattr__(self, "origin", origin)

    # --- constructors -------------------------------------------------------
    @classmethod
    def binary(cls, data, spacing: Sequence[float] = (1.0, 1.0, 1.0),
               origin: Sequence[float] = (0.0, 0.0, 0.0)) -> "VoxelGrid":
        return cls(np.asarray(data), tuple(spacing), tuple(origin), PayloadKind.BINARY)

    @classmethod
    def scalar(cls, data, spacing: Sequence[float] = (1.0, 1.0, 1.0),
               origin: Sequence[float] = (0.0, 0.0, 0.0)) -> "VoxelGrid":
        return cls(np.asarray(data), tuple(spacing), tuple(origin), PayloadKind.SCALAR)

    @classmethod
    def vector(cls, data, spacing: Sequence[float] = (1.0, 1.0, 1.0),
               origin: Sequence[float] = (0.0, 0.0, 0.0)) -> "VoxelGrid":
        return cls(np.asarray(data), tuple(spacing), tuple(origin), PayloadKind.VECTOR)

    @classmethod
    def zeros_like(cls, other: "VoxelGrid", kind: PayloadKind = PayloadKind.BINARY) -> "VoxelGrid":
        if kind is PayloadKind.VECTOR:
            data = np.zeros((3,) + other.dims)
        else:
            data = np.zeros(other.dims, dtype=bool if kind is PayloadKind.BINARY else np.float64)
        return cls(data, other.spacing, other.origin, kind)

    # --- properties ---------------------------------------------------------
    @property
    def dims(self) -> Index3:
        shape = self.data.shape[1:] if self.kind is PayloadKind.VECTOR else self.data.shape
        return tuple(int(d) for d in shape)  # type: ignore[return-value]

    @property
    def is_binary(self) -> bool:
        return self.kind is PayloadKind.BINARY

    @property
    def voxel_volume(self) -> float:
        return float(np.prod(self.spacing))

    def count(self) -> int:
        """Number of nonzero voxels."""
        return int(np.count_nonzero(self.data))

    def with_data(self, data: np.ndarray, kind: Optional[PayloadKind] = None) -> "VoxelGrid":
        """New grid with this geometry and another payload."""
        return VoxelGrid(np.asarray(data), self.spacing, self.origin, kind or self.kind)

    def physical_extent(self) -> Vec3:
        return tuple(d * s for d, s in zip(self.dims, self.spacing))  # type: ignore[return-value]

    def same_geometry(self, other: "VoxelGrid", atol: float = 1e-6) -> bool:
        return (self.dims == other.dims
                and np.allclose(self.spacing, other.spacing, atol=atol)
                and np.allclose(self.origin, other.origin, atol=atol))

    def require_same_geometry(self, other: "VoxelGrid", what: str = "grids") -> None:
        if not self.same_geometry(other):
            raise GeometryMismatch(
                f"{what} differ in geometry: dims {self.dims} vs {other.dims}, "
                f"spacing {self.spacing} vs {other.spacing}, origin {self.origin} vs {other.origin}"
            )

    def equals(self, other: "VoxelGrid") -> bool:
        """Voxelwise and geometric equality."""
        return self.same_geometry(other) and np.array_equal(self.data, other.data)

    def __repr__(self) -> str:
        return (f"VoxelGrid(kind={self.kind.value}, dims={self.dims}, "
                f"spacing={self.spacing}, origin={self.origin})")


@dataclass(frozen=True)
class BoundingBox:
    """Voxel-index box, ``lower`` inclusive and ``upper`` exclusive."""
    lower: Index3
    upper: Index3

    def __post_init__(self):
        if any(lo >= up for lo, up in zip(self.lower, self.upper)):
            raise ValueError(f"empty bounding box {self.lower}..{self.upper}")

    @property
    def extent(self) -> Index3:
        return tuple(up - lo for lo, up in zip(self.lower, self.upper))  # type: ignore[return-value]

    def expand(self, offset: int) -> "BoundingBox":
        return BoundingBox(tuple(lo - offset for lo in self.lower),
                           tuple(up + offset for up in self.upper))

    def clamp(self, dims: Sequence[int]) -> "BoundingBox":
        return BoundingBox(tuple(max(0, lo) for lo in self.lower),
                           tuple(min(int(d), up) for d, up in zip(dims, self.upper)))

    def slices(self) -> Tuple[slice, slice, slice]:
        return tuple(slice(lo, up) for lo, up in zip(self.lower, self.upper))  # type: ignore[return-value]


@dataclass(frozen=True)
class GeometryProvenance:
    """Everything needed to map a cropped/resampled/padded grid back.

    ``pad_before`` is signed per axis: positive values are zero padding
    added in front of the content, negative values mean content was cut
    (overflow). ``resampled_dims`` equals the crop extent when no resampling
    happened.
    """
    original_dims: Index3
    original_spacing: Vec3
    original_origin: Vec3
    crop_lower: Index3
    crop_upper: Index3
    resampled_dims: Index3
    resampled_spacing: Vec3
    pad_before: Index3
    target_dims: Index3
    overflow_flag: bool = False
    clamped: bool = False

    @property
    def pad_offsets(self) -> Tuple[Index3, Index3]:
        """Per-face padding (before, after) in voxels of the target frame."""
        after = tuple(t - r - p for t, r, p in zip(self.target_dims, self.resampled_dims, self.pad_before))
        return self.pad_before, after  # type: ignore[return-value]

    @property
    def crop_dims(self) -> Index3:
        return tuple(up - lo for lo, up in zip(self.crop_lower, self.crop_upper))  # type: ignore[return-value]

    @property
    def is_resampled(self) -> bool:
        return tuple(self.resampled_dims) != tuple(self.crop_dims)

    def to_dict(self) -> dict:
        return {
            "original_dims": list(self.original_dims),
            "original_spacing": list(self.original_spacing),
            "original_origin": list(self.original_origin),
            "crop_lower": list(self.crop_lower),
            "crop_upper": list(self.crop_upper),
            "resampled_dims": list(self.resampled_dims),
            "resampled_spacing": list(self.resampled_spacing),
            "pad_before": list(self.pad_before),
            "target_dims": list(self.target_dims),
            "overflow_flag": self.overflow_flag,
            "clamped": self.clamped,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GeometryProvenance":
        return cls(
            original_dims=tuple(int(v) for v in data["original_dims"]),
            original_spacing=tuple(float(v) for v in data["original_spacing"]),
            original_origin=tuple(float(v) for v in data["original_origin"]),
            crop_lower=tuple(int(v) for v in data["crop_lower"]),
            crop_upper=tuple(int(v) for v in data["crop_upper"]),
            resampled_dims=tuple(int(v) for v in data["resampled_dims"]),
            resampled_spacing=tuple(float(v) for v in data["resampled_spacing"]),
            pad_before=tuple(int(v) for v in data["pad_before"]),
            target_dims=tuple(int(v) for v in data["target_dims"]),
            overflow_flag=bool(data.get("overflow_flag", False)),
            clamped=bool(data.get("clamped", False)),
        )


# =============================================================================
# GEOMETRY
# =============================================================================

def bounding_box(grid: VoxelGrid) -> BoundingBox:
    """Tightest box around the nonzero voxels."""
    nonzero = np.nonzero(grid.data)
    if nonzero[0].size == 0:
        raise EmptyVolume("bounding box of an empty volume")
    lower = tuple(int(axis.min()) for axis in nonzero)
    upper = tuple(int(axis.max()) + 1 for axis in nonzero)
    return BoundingBox(lower, upper)


def _resample_to(grid: VoxelGrid, new_dims: Index3, new_spacing: Vec3,
                 interpolation: Interpolation) -> VoxelGrid:
    # same outer cell faces: output index j samples the input at (j + 0.5) * ns / s - 0.5
    new_origin = tuple(o - 0.5 * s + 0.5 * ns for o, s, ns in zip(grid.origin, grid.spacing, new_spacing))
    return sample_onto(grid, new_dims, new_spacing, new_origin, interpolation)


def sample_onto(grid: VoxelGrid, new_dims: Sequence[int], new_spacing: Sequence[float],
                new_origin: Sequence[float], interpolation: Interpolation) -> VoxelGrid:
    """Sample ``grid`` on another axis-aligned lattice given by dims/spacing/origin."""
    new_dims = tuple(int(d) for d in new_dims)
    new_spacing = _as_vec3(new_spacing, "spacing")
    new_origin = _as_vec3(new_origin, "origin")
    scale = np.array(new_spacing) / np.array(grid.spacing)
    offset = (np.array(new_origin) - np.array(grid.origin)) / np.array(grid.spacing)

    def _map(volume: np.ndarray) -> np.ndarray:
        return ndimage.affine_transform(volume, scale, offset=offset, output_shape=new_dims,
                                        order=interpolation.order, mode="nearest", prefilter=False)

    if grid.kind is PayloadKind.BINARY:
        if interpolation is Interpolation.NEAREST:
            out = _map(grid.data.astype(np.uint8)).astype(bool)
        else:
            out = _map(grid.data.astype(np.float32)) >= 0.5
    elif grid.kind is PayloadKind.SCALAR:
        out = _map(grid.data.astype(np.float64))
    else:
        out = np.stack([_map(component) for component in grid.data.astype(np.float64)])
    return VoxelGrid(out, new_spacing, new_origin, grid.kind)


def resample(grid: VoxelGrid, target_spacing: Sequence[float],
             interpolation: Interpolation = Interpolation.NEAREST) -> VoxelGrid:
    """Resample to a physical spacing; dims become round(dims * spacing / target)."""
    target = _as_vec3(target_spacing, "target_spacing")
    if any(t <= 0 for t in target):
        raise ValueError(f"target spacing must be positive, got {target}")
    new_dims = tuple(max(1, int(round(d * s / t))) for d, s, t in zip(grid.dims, grid.spacing, target))
    if new_dims == grid.dims and np.allclose(target, grid.spacing):
        return grid.with_data(np.array(grid.data))
    return _resample_to(grid, new_dims, target, interpolation)


def resize(grid: VoxelGrid, target_dims: Sequence[int],
           interpolation: Interpolation = Interpolation.NEAREST) -> VoxelGrid:
    """Resample to exact dims over the same physical support."""
    dims = tuple(int(d) for d in target_dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"target dims must be positive, got {dims}")
    if dims == grid.dims:
        return grid.with_data(np.array(grid.data))
    spacing = tuple(od * s / nd for od, s, nd in zip(grid.dims, grid.spacing, dims))
    return _resample_to(grid, dims, spacing, interpolation)


def crop(grid: VoxelGrid, box: BoundingBox) -> VoxelGrid:
    """Extract a box already clamped to the grid."""
    clamped = box.clamp(grid.dims)
    if clamped != box:
        raise ValueError(f"crop box {box} exceeds grid dims {grid.dims}")
    data = grid.data[(slice(None),) + box.slices()] if grid.kind is PayloadKind.VECTOR else grid.data[box.slices()]
    origin = tuple(o + lo * s for o, lo, s in zip(grid.origin, box.lower, grid.spacing))
    return VoxelGrid(np.array(data), grid.spacing, origin, grid.kind)


def center_pad(grid: VoxelGrid, target_dims: Sequence[int]) -> Tuple[VoxelGrid, Index3, bool]:
    """Center the grid inside ``target_dims``; oversize axes are center-cropped.

    Returns the placed grid, the signed per-axis offset of the content inside
    the target and whether any content was cut.
    """
    target = tuple(int(d) for d in target_dims)
    pad_before = tuple((t - d) // 2 if t >= d else -((d - t) // 2) for d, t in zip(grid.dims, target))
    overflow = any(d > t for d, t in zip(grid.dims, target))
    out = place(grid.data, pad_before, target, vector=grid.kind is PayloadKind.VECTOR)
    origin = tuple(o - p * s for o, p, s in zip(grid.origin, pad_before, grid.spacing))
    return VoxelGrid(out, grid.spacing, origin, grid.kind), pad_before, overflow  # type: ignore[return-value]


def place(data: np.ndarray, offset: Sequence[int], target_dims: Sequence[int], vector: bool = False) -> np.ndarray:
    """Write ``data`` into a zero array of ``target_dims`` at a signed offset, clipping overhang."""
    spatial = data.shape[1:] if vector else data.shape
    out_shape = ((3,) if vector else ()) + tuple(target_dims)
    out = np.zeros(out_shape, dtype=data.dtype)
    dst, src = [], []
    for off, size, tgt in zip(offset, spatial, target_dims):
        start = max(0, off)
        stop = min(tgt, off + size)
        if stop <= start:
            return out
        dst.append(slice(start, stop))
        src.append(slice(start - off, stop - off))
    lead = (slice(None),) if vector else ()
    out[lead + tuple(dst)] = data[lead + tuple(src)]
    return out


def crop_pad(grid: VoxelGrid, box: BoundingBox, offset: int,
             target_dims: Sequence[int]) -> Tuple[VoxelGrid, GeometryProvenance]:
    """Crop ``box`` (grown by ``offset``, clamped) and center it in ``target_dims``."""
    grown = box.expand(int(offset))
    clamped = grown.clamp(grid.dims)
    region = crop(grid, clamped)
    placed, pad_before, overflow = center_pad(region, target_dims)
    if overflow:
        logger.warning(f"crop_pad overflow: content {region.dims} exceeds target {tuple(target_dims)}")
    provenance = GeometryProvenance(
        original_dims=grid.dims,
        original_spacing=grid.spacing,
        original_origin=grid.origin,
        crop_lower=clamped.lower,
        crop_upper=clamped.upper,
        resampled_dims=region.dims,
        resampled_spacing=region.spacing,
        pad_before=pad_before,
        target_dims=tuple(int(d) for d in target_dims),  # type: ignore[arg-type]
        overflow_flag=overflow,
        clamped=clamped != grown,
    )
    return placed, provenance


def uncrop_pad(grid: VoxelGrid, provenance: GeometryProvenance,
               interpolation: Interpolation = Interpolation.NEAREST) -> VoxelGrid:
    """Invert :func:`crop_pad` (and the resampling recorded by preprocessing)."""
    if grid.dims != tuple(provenance.target_dims):
        raise GeometryMismatch(f"grid dims {grid.dims} do not match provenance target {provenance.target_dims}")
    vector = grid.kind is PayloadKind.VECTOR
    # undo the centering: the content occupies [pad_before, pad_before + resampled_dims)
    back = tuple(-p for p in provenance.pad_before)
    content = place(grid.data, back, provenance.resampled_dims, vector=vector)
    if provenance.is_resampled or not np.allclose(provenance.resampled_spacing, provenance.original_spacing):
        spacing = np.asarray(provenance.original_spacing)
        resampled_spacing = np.asarray(provenance.resampled_spacing)
        # crop frame origin at 0; the resampled lattice shares its outer cell faces
        region = VoxelGrid(content, provenance.resampled_spacing,
                           tuple(-0.5 * spacing + 0.5 * resampled_spacing), grid.kind)
        content = sample_onto(region, provenance.crop_dims, provenance.original_spacing,
                              (0.0, 0.0, 0.0), interpolation).data
    restored = place(np.asarray(content), provenance.crop_lower, provenance.original_dims, vector=vector)
    return VoxelGrid(restored, provenance.original_spacing, provenance.original_origin, grid.kind)


def translate(grid: VoxelGrid, shift_mm: Sequence[float]) -> VoxelGrid:
    """Shift the payload by a physical vector; nearest sampling, zero fill."""
    shift_vox = np.asarray(shift_mm, dtype=np.float64) / np.asarray(grid.spacing)
    if grid.kind is PayloadKind.BINARY:
        out = ndimage.shift(grid.data.astype(np.uint8), shift_vox, order=0, mode="constant", cval=0)
        return grid.with_data(out.astype(bool))
    if grid.kind is PayloadKind.SCALAR:
        return grid.with_data(ndimage.shift(grid.data, shift_vox, order=1, mode="constant", cval=0.0))
    return grid.with_data(np.stack([ndimage.shift(c, shift_vox, order=1, mode="constant") for c in grid.data]))


# =============================================================================
# SET OPERATIONS AND MEASURES
# =============================================================================

_LOGICAL_OPS = {
    "and": np.logical_and,
    "or": np.logical_or,
    "xor": np.logical_xor,
    "and_not": lambda a, b: np.logical_and(a, np.logical_not(b)),
}


def logical(a: VoxelGrid, b: VoxelGrid, op: str) -> VoxelGrid:
    """Voxelwise boolean combination of two binary grids."""
    if op not in _LOGICAL_OPS:
        raise ValueError(f"unknown logical op '{op}', expected one of {sorted(_LOGICAL_OPS)}")
    a.require_same_geometry(b, what=f"operands of '{op}'")
    return a.with_data(_LOGICAL_OPS[op](a.data.astype(bool), b.data.astype(bool)), PayloadKind.BINARY)


def distance_transform(grid: VoxelGrid) -> VoxelGrid:
    """Exact Euclidean distance (mm) from each voxel center to the nearest nonzero voxel center.

    An all-zero grid yields ``inf`` everywhere.
    """
    mask = grid.data.astype(bool)
    if not mask.any():
        return grid.with_data(np.full(grid.dims, np.inf), PayloadKind.SCALAR)
    distances = ndimage.distance_transform_edt(~mask, sampling=grid.spacing)
    return grid.with_data(np.asarray(distances, dtype=np.float64), PayloadKind.SCALAR)


def voxel_positions(grid: VoxelGrid, indices: np.ndarray) -> np.ndarray:
    """Physical positions (mm) of an ``(n, 3)`` index array."""
    return np.asarray(grid.origin) + np.asarray(indices, dtype=np.float64) * np.asarray(grid.spacing)


def centroid(grid: VoxelGrid) -> np.ndarray:
    """Mean physical position of the nonzero voxels."""
    indices = np.argwhere(grid.data)
    if indices.size == 0:
        raise EmptyVolume("centroid of an empty volume")
    return voxel_positions(grid, indices).mean(axis=0)
