"""
Dataset manifests: discovering case directories and splitting them into
training and validation sets.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np

from dataio.cases import CASE_FILES, CaseRecord, read_case
from volume.errors import EmptyDataset, MissingFile

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CaseReference:
    """Lazy pointer to a case directory."""
    case_id: str
    directory: Path
    has_defect: bool

    def load(self, require_defect: bool = True) -> CaseRecord:
        return read_case(self.directory, require_defect=require_defect)


def dataset_manifest(directory: Union[str, Path], require_defect: bool = True) -> List[CaseReference]:
    """Scan ``<dir>/<case_id>/{complete,defective,defect}.nrrd`` case folders.

    Training manifests (``require_defect``) need the defect file; inference
    manifests only need the defective skull.
    """
    root = Path(directory)
    if not root.is_dir():
        raise MissingFile(f"dataset directory not found: {root}")
    references = []
    for case_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        present = {name for name in CASE_FILES if (case_dir / f"{name}.nrrd").is_file()}
        if not present:
            continue
        if "defective" not in present:
            raise MissingFile("missing defective.nrrd", case_id=case_dir.name)
        if require_defect:
            if "defect" not in present:
                raise MissingFile("missing defect.nrrd", case_id=case_dir.name)
        references.append(CaseReference(case_dir.name, case_dir, "defect" in present))
    logger.info(f"Manifest {root}: {len(references)} cases")
    return references


def parse_ratio(ratio: Union[float, str]) -> float:
    """Accept ``0.9`` or ``"9:1"``."""
    if isinstance(ratio, str) and ":" in ratio:
        train, val = (float(part) for part in ratio.split(":", 1))
        if train < 0 or val < 0 or train + val == 0:
            raise ValueError(f"invalid split ratio '{ratio}'")
        return train / (train + val)
    value = float(ratio)
    if not 0.0 < value <= 1.0:
        raise ValueError(f"split ratio must lie in (0, 1], got {value}")
    return value


def split(manifest: Sequence, ratio: Union[float, str] = "9:1", seed: int = 0) -> Tuple[list, list]:
    """Seeded random split; the training share is honored within one case."""
    items = list(manifest)
    if not items:
        raise EmptyDataset("cannot split an empty dataset")
    fraction = parse_ratio(ratio)
    order = np.random.default_rng(seed).permutation(len(items))
    n_train = int(round(fraction * len(items)))
    n_train = min(max(n_train, 1), len(items))
    train = [items[i] for i in sorted(order[:n_train])]
    val = [items[i] for i in sorted(order[n_train:])]
    logger.info(f"Split {len(items)} cases into {len(train)} train / {len(val)} val (seed={seed})")
    return train, val
