"""
Volume file I/O, case records, manifests and the synthetic skull generator.
"""

from dataio.cases import CaseRecord, read_case, write_case
from dataio.manifest import CaseReference, dataset_manifest, parse_ratio, split
from dataio.nrrd_io import read_nrrd, write_nrrd
from dataio.synthetic import (
    DatasetGroup, DefectType, SyntheticConfig, generate_dataset, generate_synthetic_case,
)

__all__ = [
    "CaseRecord", "read_case", "write_case",
    "CaseReference", "dataset_manifest", "parse_ratio", "split",
    "read_nrrd", "write_nrrd",
    "DatasetGroup", "DefectType", "SyntheticConfig", "generate_dataset", "generate_synthetic_case",
]
