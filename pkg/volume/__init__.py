"""
Voxel grids and the lattice operations shared by the reconstruction pipeline.
"""

from volume.errors import (
    CranialError, ErrorCategory, EmptyVolume, GeometryMismatch,
)
from volume.grid import (
    BoundingBox, GeometryProvenance, Interpolation, PayloadKind, VoxelGrid,
    bounding_box, centroid, crop, crop_pad, distance_transform, logical,
    resample, resize, translate, uncrop_pad,
)
from volume.morphology import (
    ball, close, connected_components, contour, dilate, erode, keep_largest,
    median_filter, morphology, open_,
)

__all__ = [
    "CranialError", "ErrorCategory", "EmptyVolume", "GeometryMismatch",
    "BoundingBox", "GeometryProvenance", "Interpolation", "PayloadKind", "VoxelGrid",
    "bounding_box", "centroid", "crop", "crop_pad", "distance_transform", "logical",
    "resample", "resize", "translate", "uncrop_pad",
    "ball", "close", "connected_components", "contour", "dilate", "erode",
    "keep_largest", "median_filter", "morphology", "open_",
]
