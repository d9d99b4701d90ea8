"""
Sampling new training cases from a trained VAE.
"""

import logging
from typing import List, Sequence

import numpy as np

from dataio.cases import CaseRecord
from nnet.tensor import Tensor
from nnet.unet import NetworkWeights
from vae.losses import DEFECT_CHANNEL, SKULL_CHANNEL
from vae.model import decode
from volume.errors import ConfigValidationError, GenerationDegenerate
from volume.grid import VoxelGrid

logger = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.5
ATTEMPTS_PER_CASE = 10


def decode_latents(weights: NetworkWeights, z: np.ndarray) -> np.ndarray:
    """Generated two-channel probabilities for latent codes ``z`` of shape (N, L)."""
    return decode(weights, Tensor(np.asarray(z, dtype=weights.dtype))).data


def raw_overlap(weights: NetworkWeights, n: int, seed: int = 0, threshold: float = DEFAULT_THRESHOLD) -> float:
    """Mean ``|G_S ∧ G_I| / |G_I|`` of thresholded raw decodes, before disjointness is forced."""
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(n):
        out = decode_latents(weights, rng.standard_normal((1, weights.descriptor.latent_dim)))[0] >= threshold
        defect_count = np.count_nonzero(out[DEFECT_CHANNEL])
        if defect_count:
            ratios.append(np.count_nonzero(out[SKULL_CHANNEL] & out[DEFECT_CHANNEL]) / defect_count)
    return float(np.mean(ratios)) if ratios else 0.0


def generate_cases(weights: NetworkWeights, n: int, seed: int = 0, threshold: float = DEFAULT_THRESHOLD,
                   spacing: Sequence[float] = (1.0, 1.0, 1.0), origin: Sequence[float] = (0.0, 0.0, 0.0),
                   prefix: str = "vae") -> List[CaseRecord]:
    """Decode ``n`` valid cases from standard-normal latents.

    ``defective := G_S``, ``defect := G_I ∧ ¬G_S`` and ``complete :=
    defective ∨ defect``. Samples with an empty skull or defect are redrawn,
    up to ``10·n`` draws in total.
    """
    if n < 0:
        raise ConfigValidationError(f"number of generated cases must be >= 0, got {n}")
    if not 0.0 < threshold < 1.0:
        raise ConfigValidationError(f"threshold must lie in (0, 1), got {threshold}")
    rng = np.random.default_rng(seed)
    budget = ATTEMPTS_PER_CASE * n
    cases: List[CaseRecord] = []
    attempts = rejected = 0
    while len(cases) < n:
        if attempts >= budget:
            raise GenerationDegenerate(f"only {len(cases)} of {n} cases after {attempts} draws "
                                       f"({rejected} rejected as empty)")
        attempts += 1
        out = decode_latents(weights, rng.standard_normal((1, weights.descriptor.latent_dim)))[0] >= threshold
        skull = out[SKULL_CHANNEL]
        defect = out[DEFECT_CHANNEL] & ~skull
        if not skull.any() or not defect.any():
            rejected += 1
            continue
        defective = VoxelGrid.binary(skull, spacing, origin)
        record = CaseRecord(complete=defective.with_data(skull | defect), defective=defective,
                            defect=defective.with_data(defect), case_id=f"{prefix}_{len(cases):05d}",
                            metadata={"source": "vae", "seed": int(seed), "draw": attempts - 1})
        cases.append(record.validate())
    logger.info(f"Generated {n} VAE cases in {attempts} draws ({rejected} rejected)")
    return cases
