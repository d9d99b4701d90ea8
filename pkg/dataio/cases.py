"""
CaseRecord: the (complete skull, defective skull, defect) triple that forms
one unit of training data, with invariant checks and on-disk layout.
"""

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import orjson

from dataio.nrrd_io import read_nrrd, write_nrrd
from volume.errors import CaseInvariantViolation, CorruptFile, GeometryMismatch, MissingFile
from volume.grid import PayloadKind, VoxelGrid

logger = logging.getLogger(__name__)

CASE_FILES = ("complete", "defective", "defect")
META_FILE = "case.json"

# share of voxels allowed to violate the union/disjointness rule in loaded data
DEFAULT_TOLERANCE = 0.01


@dataclass(frozen=True)
class CaseRecord:
    """One skull case. ``defect`` may be ``None`` for inference-only cases."""
    complete: Optional[VoxelGrid]
    defective: VoxelGrid
    defect: Optional[VoxelGrid]
    case_id: str
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_training_case(self) -> bool:
        return self.complete is not None and self.defect is not None

    def violations(self) -> int:
        """Voxels breaking ``defective ∧ defect = ∅`` or ``defective ∨ defect = complete``."""
        if not self.is_training_case:
            return 0
        defective, defect, complete = self.defective.data, self.defect.data, self.complete.data
        overlap = defective & defect
        union_mismatch = (defective | defect) != complete
        return int(np.count_nonzero(overlap | union_mismatch))

    def validate(self) -> "CaseRecord":
        """Exact invariant check; raises on any violating voxel."""
        self._check_geometry()
        bad = self.violations()
        if bad:
            raise CaseInvariantViolation(f"{bad} voxels violate the case invariants", case_id=self.case_id)
        return self

    def validate_loaded(self, tolerance: float = DEFAULT_TOLERANCE) -> "CaseRecord":
        """Tolerant check for real data.

        Up to ``tolerance`` of the complete skull may violate the rules; such
        cases are corrected with ``defect := defect ∧ ¬defective`` and
        ``complete := defective ∨ defect``. Larger violations raise.
        """
        self._check_geometry()
        if not self.is_training_case:
            return self
        bad = self.violations()
        if bad == 0:
            return self
        allowed = tolerance * max(1, self.complete.count())
        if bad > allowed:
            raise CaseInvariantViolation(
                f"{bad} violating voxels exceed tolerance {tolerance:.2%} ({allowed:.0f} voxels)",
                case_id=self.case_id)
        defect = self.defect.data & ~self.defective.data
        complete = self.defective.data | defect
        logger.warning(f"Case {self.case_id}: corrected {bad} voxels violating case invariants")
        return replace(self,
                       defect=self.defect.with_data(defect),
                       complete=self.complete.with_data(complete))

    def _check_geometry(self) -> None:
        for name in ("complete", "defect"):
            grid = getattr(self, name)
            if grid is None:
                continue
            try:
                self.defective.require_same_geometry(grid, what=f"defective and {name}")
            except GeometryMismatch as e:
                raise GeometryMismatch(str(e), case_id=self.case_id) from e
        for name in CASE_FILES:
            grid = getattr(self, name)
            if grid is not None and grid.kind is not PayloadKind.BINARY:
                raise CaseInvariantViolation(f"{name} must be binary", case_id=self.case_id)

    @classmethod
    def from_defect(cls, complete: VoxelGrid, defect: VoxelGrid, case_id: str,
                    metadata: Optional[Dict[str, Any]] = None) -> "CaseRecord":
        """Build a case whose defective skull is ``complete ∧ ¬defect``."""
        defect_mask = complete.data & defect.data
        return cls(complete=complete,
                   defective=complete.with_data(complete.data & ~defect_mask),
                   defect=complete.with_data(defect_mask),
                   case_id=case_id,
                   metadata=dict(metadata or {}))


def write_case(record: CaseRecord, root: Union[str, Path], encoding: str = "gzip") -> Path:
    """Write ``<root>/<case_id>/{complete,defective,defect}.nrrd`` plus metadata."""
    case_dir = Path(root) / record.case_id
    case_dir.mkdir(parents=True, exist_ok=True)
    for name in CASE_FILES:
        grid = getattr(record, name)
        if grid is not None:
            write_nrrd(grid, case_dir / f"{name}.nrrd", encoding=encoding)
    if record.metadata:
        (case_dir / META_FILE).write_bytes(orjson.dumps(record.metadata, option=orjson.OPT_SORT_KEYS))
    return case_dir


def read_case(case_dir: Union[str, Path], require_defect: bool = True,
              tolerance: float = DEFAULT_TOLERANCE) -> CaseRecord:
    """Load a case directory and validate it with the real-data tolerance."""
    case_dir = Path(case_dir)
    case_id = case_dir.name
    grids = {}
    for name in CASE_FILES:
        path = case_dir / f"{name}.nrrd"
        if path.is_file():
            try:
                grids[name] = read_nrrd(path, kind=PayloadKind.BINARY)
            except ValueError as e:
                raise CorruptFile(f"{name}.nrrd is not a 0/1 mask: {e}", case_id=case_id) from e
        elif name == "defective" or (name == "defect" and require_defect):
            raise MissingFile(f"missing {name}.nrrd", case_id=case_id)
        else:
            grids[name] = None
    metadata = {}
    meta_path = case_dir / META_FILE
    if meta_path.is_file():
        metadata = orjson.loads(meta_path.read_bytes())
    record = CaseRecord(grids["complete"], grids["defective"], grids["defect"], case_id, metadata)
    return record.validate_loaded(tolerance)
