"""
Case directories as stage inputs and outputs.
"""

import logging
import threading
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Union

from dataio.cases import CaseRecord, read_case, write_case
from dataio.manifest import dataset_manifest
from preprocess import GeometryProvenance
from volume.errors import EmptyDataset, MissingFile, StageCancelled

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def load_cases(directories: Union[PathLike, Sequence[PathLike]], require_defect: bool = True,
               groups: Optional[Iterable[str]] = None) -> List[CaseRecord]:
    """Every case under one or more directories, optionally limited to dataset groups.

    Cases without a ``group`` entry in their metadata always pass the filter.
    """
    if isinstance(directories, (str, Path)):
        directories = [directories]
    wanted = set(groups) if groups is not None else None
    cases = []
    for directory in directories:
        for reference in dataset_manifest(directory, require_defect=require_defect):
            case = reference.load(require_defect=require_defect)
            group = case.metadata.get("group")
            if wanted is None or group is None or group in wanted:
                cases.append(case)
    if not cases:
        raise EmptyDataset(f"no cases found in {', '.join(str(d) for d in directories)}")
    return cases


def write_cases(records: Iterable[CaseRecord], directory: PathLike,
                cancelled: Optional[threading.Event] = None) -> List[str]:
    """Write each record under ``directory``; stops before the next case once ``cancelled`` is set."""
    directory = Path(directory)
    ids: List[str] = []

    def check() -> None:
        if cancelled is not None and cancelled.is_set():
            raise StageCancelled(f"stage cancelled after writing {len(ids)} cases to {directory}")

    check()
    directory.mkdir(parents=True, exist_ok=True)
    for record in records:
        check()
        write_case(record, directory)
        ids.append(record.case_id)
    logger.info(f"Wrote {len(ids)} cases to {directory}")
    return ids


def case_provenance(record: CaseRecord) -> GeometryProvenance:
    data = record.metadata.get("provenance")
    if data is None:
        raise MissingFile("case metadata has no preprocessing provenance", case_id=record.case_id)
    return GeometryProvenance.from_dict(data)


def matching_case(directory: PathLike, case_id: str, require_defect: bool) -> CaseRecord:
    """The case ``case_id`` from another stage's directory."""
    case_dir = Path(directory) / case_id
    if not case_dir.is_dir():
        raise MissingFile(f"no case directory in {directory}", case_id=case_id)
    return read_case(case_dir, require_defect=require_defect)
