"""
VAE training: Adam on the VAE objective with a fresh reparameterization
draw per step, the exponential learning-rate schedule of the network
trainer and patience-based early stopping on the training loss.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from dataio.cases import CaseRecord
from nnet.augment import AugmentationRanges, augment_volumes
from nnet.losses import DEFAULT_ALPHA
from nnet.optim import Adam, scheduled_lr
from nnet.tensor import Tensor
from nnet.unet import NetworkWeights
from vae.losses import DEFAULT_BETA, vae_loss
from vae.model import VaeDescriptor, build_vae, vae_forward
from volume.errors import ConfigValidationError, EmptyDataset, NonFiniteLoss, ShapeMismatch

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class VaeTrainConfig:
    batch_size: int = 2
    initial_lr: float = 0.001
    decay: float = 0.97
    beta: float = DEFAULT_BETA
    alpha: float = DEFAULT_ALPHA
    epochs: int = 50
    patience: int = 10
    augment: bool = False
    seed: int = 0
    precision: str = "float32"

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1 or self.patience < 1:
            raise ConfigValidationError("batch_size, epochs and patience must be >= 1")
        if not 0.95 <= self.decay <= 0.99:
            raise ConfigValidationError(f"decay must lie in [0.95, 0.99], got {self.decay}")
        if self.initial_lr <= 0 or self.beta < 0 or self.alpha < 0:
            raise ConfigValidationError("initial_lr must be positive, beta and alpha non-negative")
        if self.precision not in ("float32", "float64"):
            raise ConfigValidationError(f"precision must be float32 or float64, got {self.precision}")


@dataclass
class VaeEpochRecord:
    epoch: int
    lr: float
    loss: float
    reconstruction: float
    kl: float
    disjoint: float


@dataclass
class VaeTrainResult:
    weights: NetworkWeights
    history: List[VaeEpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False


def case_pair(case: CaseRecord) -> np.ndarray:
    """(2, D, H, W) array of the defective skull and the defect."""
    if case.defect is None:
        raise EmptyDataset("case has no defect grid for VAE training", case_id=case.case_id)
    return np.stack([case.defective.data, case.defect.data])


def train_vae(dataset: Sequence[CaseRecord], config: VaeTrainConfig = VaeTrainConfig(),
              descriptor: Optional[VaeDescriptor] = None, weights: Optional[NetworkWeights] = None,
              on_epoch: Optional[Callable[[VaeEpochRecord], None]] = None) -> VaeTrainResult:
    """Fit a VAE to (defective, defect) pairs of preprocessed cases.

    Without ``weights`` a fresh network is built from ``descriptor`` (default:
    one sized to the dataset dims).
    """
    if not dataset:
        raise EmptyDataset("VAE training set is empty")
    dtype = np.dtype(config.precision)
    pairs = [case_pair(case) for case in dataset]
    dims = pairs[0].shape[1:]
    if any(p.shape[1:] != dims for p in pairs):
        raise ShapeMismatch("VAE training cases must share one grid shape")
    if weights is None:
        descriptor = descriptor or VaeDescriptor(input_dims=dims)
        weights = build_vae(descriptor, seed=config.seed, dtype=dtype)
    weights = weights.astype(dtype)
    if tuple(weights.descriptor.input_dims) != tuple(dims):
        raise ShapeMismatch(f"VAE expects {weights.descriptor.input_dims}, dataset has {dims}")

    rng = np.random.default_rng(config.seed)
    optimizer = Adam(weights)
    ranges = AugmentationRanges()
    history: List[VaeEpochRecord] = []
    best_loss, best_state, best_epoch, stale = math.inf, weights.state(), 0, 0
    stopped_early = False
    logger.info(f"Training VAE on {len(pairs)} cases, latent={weights.descriptor.latent_dim} beta={config.beta}")

    for epoch in range(config.epochs):
        lr = scheduled_lr(config.initial_lr, config.decay, epoch)
        order = rng.permutation(len(pairs))
        terms = {"loss": [], "reconstruction": [], "kl": [], "disjoint": []}
        for start in range(0, len(order), config.batch_size):
            indices = order[start:start + config.batch_size]
            batch = [np.stack(augment_volumes(tuple(pairs[i]), rng, ranges)) if config.augment else pairs[i]
                     for i in indices]
            inputs = Tensor(np.stack(batch).astype(dtype))
            optimizer.zero_grad()
            generated, mu, log_var = vae_forward(weights, inputs, rng)
            loss, parts = vae_loss(inputs, generated, mu, log_var, config.beta, config.alpha)
            value = loss.item()
            if not math.isfinite(value):
                raise NonFiniteLoss(f"VAE loss {value} at epoch {epoch} "
                                    f"(cases {[dataset[i].case_id for i in indices]}, lr={lr:.3g}, terms={parts})")
            loss.backward()
            optimizer.step(lr)
            terms["loss"].append(value)
            for key, term in parts.items():
                terms[key].append(term)

        record = VaeEpochRecord(epoch, lr, **{key: float(np.mean(v)) for key, v in terms.items()})
        history.append(record)
        logger.info(f"VAE epoch {epoch}: lr={lr:.6f} loss={record.loss:.4f} "
                    f"reconstruction={record.reconstruction:.4f} kl={record.kl:.4f} disjoint={record.disjoint:.4f}")
        if on_epoch is not None:
            on_epoch(record)

        if record.loss < best_loss:
            best_loss, best_state, best_epoch, stale = record.loss, weights.state(), epoch, 0
        else:
            stale += 1
            if stale >= config.patience:
                logger.info(f"VAE early stop at epoch {epoch}")
                stopped_early = True
                break

    weights.load_state(best_state)
    return VaeTrainResult(weights, history, best_epoch, stopped_early)
