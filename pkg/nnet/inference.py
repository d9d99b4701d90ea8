"""
Two-step inference: coarse defect reconstruction in the working canvas and
optional refinement of the restored defect at a higher resolution around
its bounding box.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from nnet.tensor import Tensor
from nnet.unet import NetworkWeights, forward
from volume.errors import GeometryMismatch
from volume.grid import (
    BoundingBox, GeometryProvenance, Interpolation, PayloadKind, VoxelGrid,
    bounding_box, crop, resize, uncrop_pad,
)

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.5
REFINE_OFFSET = 10
REFINE_DIMS = (200, 200, 200)

# maps a boolean volume to a boolean volume of the same shape
VolumeModel = Callable[[np.ndarray], np.ndarray]


def predict_probabilities(weights: NetworkWeights, volume: np.ndarray) -> np.ndarray:
    """Forward one binary volume, returning per-voxel probabilities."""
    inputs = Tensor(volume.astype(weights.dtype)[np.newaxis, np.newaxis])
    return forward(weights, inputs).data[0, 0]


def network_model(weights: NetworkWeights, threshold: float = DEFAULT_THRESHOLD) -> VolumeModel:
    def model(volume: np.ndarray) -> np.ndarray:
        return predict_probabilities(weights, volume) >= threshold
    return model


def reconstruct(weights: NetworkWeights, defective_pre: VoxelGrid, threshold: float = DEFAULT_THRESHOLD) -> VoxelGrid:
    """Predicted defect in the preprocessed geometry."""
    if defective_pre.kind is not PayloadKind.BINARY:
        raise ValueError("reconstruction input must be binary")
    defect = network_model(weights, threshold)(defective_pre.data)
    logger.debug(f"Reconstructed {int(defect.sum())} defect voxels at threshold {threshold}")
    return defective_pre.with_data(defect)


@dataclass(frozen=True)
class RefineResult:
    defect: VoxelGrid
    provenance: GeometryProvenance


def refinement_geometry(defect_coarse: VoxelGrid, offset: int = REFINE_OFFSET,
                        refine_dims: Sequence[int] = REFINE_DIMS) -> GeometryProvenance:
    """Bounding box of the coarse defect grown by ``offset`` and resized to ``refine_dims``.

    Raises EmptyVolume for an empty defect.
    """
    grown = bounding_box(defect_coarse).expand(int(offset))
    clamped = grown.clamp(defect_coarse.dims)
    dims = tuple(int(d) for d in refine_dims)
    spacing = tuple(e * s / d for e, s, d in zip(clamped.extent, defect_coarse.spacing, dims))
    return GeometryProvenance(
        original_dims=defect_coarse.dims,
        original_spacing=defect_coarse.spacing,
        original_origin=defect_coarse.origin,
        crop_lower=clamped.lower,
        crop_upper=clamped.upper,
        resampled_dims=dims,
        resampled_spacing=spacing,
        pad_before=(0, 0, 0),
        target_dims=dims,
        clamped=clamped != grown,
    )


def to_refinement_frame(grid: VoxelGrid, provenance: GeometryProvenance,
                        interpolation: Interpolation = Interpolation.NEAREST) -> VoxelGrid:
    if grid.dims != tuple(provenance.original_dims):
        raise GeometryMismatch(f"grid dims {grid.dims} do not match refinement frame {provenance.original_dims}")
    region = crop(grid, BoundingBox(provenance.crop_lower, provenance.crop_upper))
    return resize(region, provenance.resampled_dims, interpolation)


def refine(weights_ref: Optional[NetworkWeights], defect_coarse: VoxelGrid, offset: int = REFINE_OFFSET,
           refine_dims: Sequence[int] = REFINE_DIMS, threshold: float = DEFAULT_THRESHOLD,
           model: Optional[VolumeModel] = None) -> RefineResult:
    """Refine a restored coarse defect and map it back to its original frame.

    ``model`` replaces the network (e.g. an identity for geometry checks).
    """
    provenance = refinement_geometry(defect_coarse, offset, refine_dims)
    local = to_refinement_frame(defect_coarse, provenance)
    if model is None:
        if weights_ref is None:
            raise ValueError("refine needs weights or a model")
        model = network_model(weights_ref, threshold)
    refined = local.with_data(model(local.data))
    restored = uncrop_pad(refined, provenance)
    logger.debug(f"Refined defect: {defect_coarse.count()} -> {restored.count()} voxels in {provenance.target_dims}")
    return RefineResult(restored, provenance)


def prepare_refinement_pair(coarse: VoxelGrid, ground_truth: VoxelGrid, offset: int = REFINE_OFFSET,
                            refine_dims: Sequence[int] = REFINE_DIMS) -> Tuple[np.ndarray, np.ndarray]:
    """Refinement training sample: coarse and ground-truth defects cut with the coarse defect's box."""
    coarse.require_same_geometry(ground_truth, what="coarse and ground-truth defects")
    provenance = refinement_geometry(coarse, offset, refine_dims)
    return (to_refinement_frame(coarse, provenance).data,
            to_refinement_frame(ground_truth, provenance).data)
