"""
Forward and inverse geometry chain around the networks.

Forward: bounding box of the defective skull -> grow by offset -> crop ->
resample to the working spacing -> center in the working canvas.
Inverse: undo the canvas placement and the resampling, put the crop back
into the original frame, then clean the predicted defect up with a closing
against the skull and a connected-component filter.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from dataio.cases import CaseRecord
from volume.errors import GeometryMismatch
from volume.grid import (
    BoundingBox, GeometryProvenance, Interpolation, PayloadKind, VoxelGrid,
    bounding_box, center_pad, crop, logical, resample, uncrop_pad,
)
from volume.morphology import close, keep_largest

logger = logging.getLogger(__name__)

DEFAULT_OFFSET = 20
DEFAULT_SPACING = (1.0, 1.0, 1.0)
DEFAULT_DIMS = (240, 200, 240)
CLOSING_MODES = ("union", "defect_only")


@dataclass(frozen=True)
class PreprocessedCase:
    """A case mapped into the working canvas plus the record to undo it."""
    record: CaseRecord
    provenance: GeometryProvenance


def _forward(grid: VoxelGrid, lower, upper, target_spacing, target_dims,
             interpolation: Interpolation) -> Tuple[VoxelGrid, Tuple[int, int, int], bool, Tuple[int, int, int]]:
    region = crop(grid, BoundingBox(tuple(lower), tuple(upper)))
    region = resample(region, target_spacing, interpolation)
    placed, pad_before, overflow = center_pad(region, target_dims)
    return placed, pad_before, overflow, region.dims


def preprocess_case(defective: VoxelGrid, offset: int = DEFAULT_OFFSET,
                    target_spacing: Sequence[float] = DEFAULT_SPACING,
                    target_dims: Sequence[int] = DEFAULT_DIMS,
                    interpolation: Interpolation = Interpolation.NEAREST) -> Tuple[VoxelGrid, GeometryProvenance]:
    """Map a defective skull into the working canvas.

    Raises EmptyVolume for an empty skull. Content larger than the canvas is
    center-cropped and flagged in the provenance.
    """
    box = bounding_box(defective)
    grown = box.expand(int(offset))
    clamped = grown.clamp(defective.dims)
    target_spacing = tuple(float(s) for s in target_spacing)
    target_dims = tuple(int(d) for d in target_dims)
    placed, pad_before, overflow, resampled_dims = _forward(
        defective, clamped.lower, clamped.upper, target_spacing, target_dims, interpolation)
    if overflow:
        logger.warning(f"Preprocessed content {resampled_dims} exceeds canvas {target_dims}; center-cropped")
    provenance = GeometryProvenance(
        original_dims=defective.dims,
        original_spacing=defective.spacing,
        original_origin=defective.origin,
        crop_lower=clamped.lower,
        crop_upper=clamped.upper,
        resampled_dims=resampled_dims,
        resampled_spacing=placed.spacing,
        pad_before=pad_before,
        target_dims=target_dims,
        overflow_flag=overflow,
        clamped=clamped != grown,
    )
    return placed, provenance


def apply_provenance(grid: VoxelGrid, provenance: GeometryProvenance,
                     interpolation: Interpolation = Interpolation.NEAREST) -> VoxelGrid:
    """Run the forward chain recorded in ``provenance`` on another grid of the same case."""
    if grid.dims != tuple(provenance.original_dims):
        raise GeometryMismatch(f"grid dims {grid.dims} do not match provenance {provenance.original_dims}")
    placed, _, _, resampled_dims = _forward(
        grid, provenance.crop_lower, provenance.crop_upper, provenance.resampled_spacing,
        provenance.target_dims, interpolation)
    if resampled_dims != tuple(provenance.resampled_dims):
        raise GeometryMismatch(f"resampled dims {resampled_dims} differ from provenance {provenance.resampled_dims}")
    return placed


def preprocess_record(record: CaseRecord, offset: int = DEFAULT_OFFSET,
                      target_spacing: Sequence[float] = DEFAULT_SPACING,
                      target_dims: Sequence[int] = DEFAULT_DIMS) -> PreprocessedCase:
    """Preprocess all grids of a case with the defective skull's geometry.

    Nearest sampling picks the same source voxel for every grid, so the
    case invariants survive exactly.
    """
    defective, provenance = preprocess_case(record.defective, offset, target_spacing, target_dims)
    complete = apply_provenance(record.complete, provenance) if record.complete is not None else None
    defect = apply_provenance(record.defect, provenance) if record.defect is not None else None
    metadata = dict(record.metadata, provenance=provenance.to_dict())
    mapped = CaseRecord(complete, defective, defect, record.case_id, metadata)
    if mapped.is_training_case:
        mapped.validate()
    return PreprocessedCase(mapped, provenance)


def clean_defect(defect: VoxelGrid, defective_original: VoxelGrid, closing_radius: int = 2,
                 keep_components: int = 1, closing_mode: str = "union") -> VoxelGrid:
    """Morphological cleanup of a defect already in the original frame.

    ``union`` mode closes ``defect | skull`` and removes the skull again;
    ``defect_only`` closes the defect alone. A ``closing_radius`` of 0 skips
    the closing. The result never overlaps the skull.
    """
    if closing_mode not in CLOSING_MODES:
        raise ValueError(f"closing mode must be one of {CLOSING_MODES}, got '{closing_mode}'")
    defective_original.require_same_geometry(defect, what="defect and defective skull")
    if closing_radius > 0:
        if closing_mode == "union":
            closed = close(logical(defect, defective_original, "or"), closing_radius)
        else:
            closed = close(defect, closing_radius)
        cleaned = logical(closed, defective_original, "and_not")
    else:
        cleaned = logical(defect, defective_original, "and_not")

    if keep_components > 0 and cleaned.count():
        cleaned = keep_largest(cleaned, keep_components)
    logger.debug(f"Cleaned defect: {cleaned.count()} voxels (closing r={closing_radius}, mode={closing_mode})")
    return cleaned


def postprocess_defect(defect_pred: VoxelGrid, provenance: GeometryProvenance,
                       defective_original: VoxelGrid, closing_radius: int = 2,
                       keep_components: int = 1, closing_mode: str = "union",
                       interpolation: Interpolation = Interpolation.NEAREST) -> VoxelGrid:
    """Bring a predicted defect back to the original frame and clean it."""
    if closing_mode not in CLOSING_MODES:
        raise ValueError(f"closing mode must be one of {CLOSING_MODES}, got '{closing_mode}'")
    if defect_pred.kind is not PayloadKind.BINARY:
        raise ValueError("predicted defect must be binary")
    restored = uncrop_pad(defect_pred, provenance, interpolation)
    defective_original.require_same_geometry(restored, what="restored defect and defective skull")
    return clean_defect(restored, defective_original, closing_radius, keep_components, closing_mode)


def restore_grid(grid: VoxelGrid, provenance: GeometryProvenance,
                 reference: Optional[VoxelGrid] = None,
                 interpolation: Interpolation = Interpolation.NEAREST) -> VoxelGrid:
    """Inverse geometry only, without any morphology."""
    restored = uncrop_pad(grid, provenance, interpolation)
    if reference is not None:
        if restored.dims != reference.dims:
            raise GeometryMismatch(f"restored dims {restored.dims} differ from reference {reference.dims}")
        restored = VoxelGrid(np.asarray(restored.data), reference.spacing, reference.origin, restored.kind)
    return restored
