"""
Geometry chain between the original skull frame and the networks' working canvas.
"""

from preprocess.geometry import (
    CLOSING_MODES, PreprocessedCase, apply_provenance, clean_defect, postprocess_defect,
    preprocess_case, preprocess_record, restore_grid,
)
from volume.grid import GeometryProvenance

__all__ = [
    "CLOSING_MODES", "GeometryProvenance", "PreprocessedCase", "apply_provenance", "clean_defect",
    "postprocess_defect", "preprocess_case", "preprocess_record", "restore_grid",
]
