"""
Training-set augmentation by registering complete skulls to each other.

For an ordered pair ``i -> j`` the complete skull and the defect of case
``i`` are warped into the frame of case ``j``; the new defective skull is
derived from the warped pair so the case invariants hold exactly.
"""

import logging
from concurrent.futures import ProcessPoolExecutor
from itertools import permutations
from typing import List, Optional, Sequence, Tuple

import numpy as np

from dataio.cases import CaseRecord
from registration.deformable import register_pair
from registration.presets import RegistrationPreset
from registration.transforms import warp
from volume.errors import CranialError, EmptyDataset, EmptyVolume

logger = logging.getLogger(__name__)


def sample_pairs(n: int, pair_budget: Optional[int], seed: int) -> List[Tuple[int, int]]:
    """All ordered pairs when the budget allows, else a seeded sample without replacement."""
    pairs = list(permutations(range(n), 2))
    if pair_budget is None or pair_budget >= len(pairs):
        return pairs
    if pair_budget <= 0:
        return []
    chosen = np.random.default_rng(seed).choice(len(pairs), size=pair_budget, replace=False)
    return [pairs[k] for k in sorted(chosen)]


def warp_case(source: CaseRecord, target: CaseRecord, preset: RegistrationPreset) -> CaseRecord:
    """Register ``source.complete`` onto ``target.complete`` and carry the defect along."""
    result = register_pair(source.complete, target.complete, preset)
    warped_complete = warp(source.complete, result.field)
    warped_defect = warp(source.defect, result.field)
    case_id = f"{source.case_id}_to_{target.case_id}"
    if not warped_complete.count() or not (warped_complete.data & warped_defect.data).any():
        raise EmptyVolume("warped case lost its skull or defect", case_id=case_id)
    metadata = {
        "source": source.case_id,
        "target": target.case_id,
        "preset": preset.name,
        "mse_reduction": round(result.mse_reduction, 6),
        "group": source.metadata.get("group"),
        "defect_type": source.metadata.get("defect_type"),
    }
    return CaseRecord.from_defect(warped_complete, warped_defect, case_id, metadata).validate()


def _augment_one(job) -> Optional[CaseRecord]:
    source, target, preset = job
    try:
        return warp_case(source, target, preset)
    except CranialError as e:
        logger.warning(f"Skipping pair {source.case_id} -> {target.case_id}: {e}")
        return None


def augment_by_registration(train: Sequence[CaseRecord], preset: RegistrationPreset,
                            pair_budget: Optional[int] = None, seed: int = 0, jobs: int = 1) -> List[CaseRecord]:
    """New cases for sampled ordered pairs; failed pairs are logged and skipped.

    Output order follows the pair list regardless of ``jobs``.
    """
    cases = list(train)
    if len(cases) < 2:
        raise EmptyDataset(f"registration augmentation needs at least 2 cases, got {len(cases)}")
    for case in cases:
        if not case.is_training_case:
            raise EmptyDataset("registration augmentation needs complete and defect grids", case_id=case.case_id)
    pairs = sample_pairs(len(cases), pair_budget, seed)
    work = [(cases[i], cases[j], preset) for i, j in pairs]
    logger.info(f"Registration augmentation: {len(pairs)} pairs from {len(cases)} cases "
                f"(preset={preset.name}, jobs={jobs})")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_augment_one, work))
    else:
        results = [_augment_one(item) for item in work]
    produced = [case for case in results if case is not None]
    skipped = len(results) - len(produced)
    if skipped:
        logger.warning(f"Registration augmentation skipped {skipped} of {len(results)} pairs")
    return produced
