"""
Training loop shared by the reconstruction and refinement networks.

Each epoch draws ``cases_per_iteration`` cases (cycling through seeded
permutations of the training set), augments each case with a fresh random
affine and takes Adam steps on the soft Dice loss with batches of
``batch_size``. The learning rate decays exponentially per epoch; training
stops at ``epochs`` or when the validation loss has not improved for
``patience`` epochs, and the best-validation weights are kept.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np

from dataio.cases import CaseRecord
from nnet.augment import AugmentationRanges, augment_volumes
from nnet.losses import DEFAULT_ALPHA, soft_dice_loss
from nnet.optim import Adam, scheduled_lr
from nnet.tensor import Tensor
from nnet.unet import NetworkWeights, forward
from volume.errors import ConfigValidationError, EmptyDataset, NonFiniteLoss

logger = logging.getLogger(__name__)

TARGETS = ("defect", "complete")


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 2
    cases_per_iteration: int = 500
    initial_lr: float = 0.003
    decay: float = 0.97
    alpha: float = DEFAULT_ALPHA
    scale_range: Tuple[float, float] = (0.85, 1.15)
    rotation_range: Tuple[float, float] = (-15.0, 15.0)
    translation_range: Tuple[float, float] = (-10.0, 10.0)
    augment: bool = True
    epochs: int = 50
    patience: int = 10
    seed: int = 0
    precision: str = "float32"

    def __post_init__(self):
        if self.batch_size < 1 or self.cases_per_iteration < 1 or self.epochs < 1:
            raise ConfigValidationError("batch_size, cases_per_iteration and epochs must be >= 1")
        if not 0.95 <= self.decay <= 0.99:
            raise ConfigValidationError(f"decay must lie in [0.95, 0.99], got {self.decay}")
        if self.initial_lr <= 0 or self.alpha < 0:
            raise ConfigValidationError("initial_lr must be positive and alpha non-negative")
        if self.precision not in ("float32", "float64"):
            raise ConfigValidationError(f"precision must be float32 or float64, got {self.precision}")

    @property
    def ranges(self) -> AugmentationRanges:
        return AugmentationRanges(tuple(self.scale_range), tuple(self.rotation_range), tuple(self.translation_range))

    @property
    def dtype(self):
        return np.dtype(self.precision)

    def lr(self, epoch: int) -> float:
        return scheduled_lr(self.initial_lr, self.decay, epoch)


@dataclass
class EpochRecord:
    epoch: int
    lr: float
    train_loss: float
    val_loss: Optional[float] = None


@dataclass
class TrainResult:
    weights: NetworkWeights
    history: List[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False


# A training sample is (input volume, target volume) as boolean arrays.
Sample = Tuple[np.ndarray, np.ndarray]


def case_sample(case: CaseRecord, target: str = "defect") -> Sample:
    if target not in TARGETS:
        raise ConfigValidationError(f"training target must be one of {TARGETS}, got '{target}'")
    goal = case.defect if target == "defect" else case.complete
    if goal is None:
        raise EmptyDataset(f"case has no {target} grid for training", case_id=case.case_id)
    return case.defective.data, goal.data


def _stack(samples: Sequence[Sample], dtype) -> Tuple[Tensor, np.ndarray]:
    inputs = np.stack([s[0] for s in samples])[:, np.newaxis].astype(dtype)
    targets = np.stack([s[1] for s in samples])[:, np.newaxis].astype(dtype)
    return Tensor(inputs), targets


def _epoch_order(n: int, count: int, rng: np.random.Generator) -> List[int]:
    order: List[int] = []
    while len(order) < count:
        order.extend(int(i) for i in rng.permutation(n))
    return order[:count]


def evaluate_loss(weights: NetworkWeights, samples: Sequence[Sample], alpha: float, batch_size: int) -> float:
    """Mean soft Dice loss without augmentation or gradients."""
    losses = []
    for start in range(0, len(samples), batch_size):
        inputs, targets = _stack(samples[start:start + batch_size], weights.dtype)
        losses.append(soft_dice_loss(forward(weights, inputs), targets, alpha).item())
    return float(np.mean(losses))


def train_samples(weights: NetworkWeights, samples: Sequence[Sample], config: TrainConfig,
                  validation: Sequence[Sample] = (),
                  on_epoch: Optional[Callable[[EpochRecord], None]] = None,
                  labels: Optional[Sequence[str]] = None) -> TrainResult:
    """Train on raw (input, target) arrays; see :func:`train` for the case-based entry point."""
    if not samples:
        raise EmptyDataset("training set is empty")
    weights = weights.astype(config.dtype)
    labels = list(labels) if labels is not None else [str(i) for i in range(len(samples))]
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(weights)
    history: List[EpochRecord] = []
    best_loss, best_state, best_epoch, stale = math.inf, weights.state(), 0, 0
    stopped_early = False

    for epoch in range(config.epochs):
        lr = config.lr(epoch)
        order = _epoch_order(len(samples), config.cases_per_iteration, rng)
        batch_losses = []
        for start in range(0, len(order), config.batch_size):
            indices = order[start:start + config.batch_size]
            batch = [augment_volumes(samples[i], rng, config.ranges) if config.augment else samples[i]
                     for i in indices]
            inputs, targets = _stack(batch, config.dtype)
            optimizer.zero_grad()
            loss = soft_dice_loss(forward(weights, inputs), targets, config.alpha)
            value = loss.item()
            if not math.isfinite(value):
                raise NonFiniteLoss(f"loss {value} at epoch {epoch}, batch {start // config.batch_size} "
                                    f"(cases {[labels[i] for i in indices]}, lr={lr:.3g})")
            loss.backward()
            optimizer.step(lr)
            batch_losses.append(value)

        record = EpochRecord(epoch, lr, float(np.mean(batch_losses)))
        monitored = record.train_loss
        if validation:
            record.val_loss = evaluate_loss(weights, validation, config.alpha, config.batch_size)
            monitored = record.val_loss
        history.append(record)
        logger.info(f"Epoch {epoch}: lr={lr:.6f} train_loss={record.train_loss:.4f}"
                    + (f" val_loss={record.val_loss:.4f}" if record.val_loss is not None else ""))
        if on_epoch is not None:
            on_epoch(record)

        if monitored < best_loss:
            best_loss, best_state, best_epoch, stale = monitored, weights.state(), epoch, 0
        else:
            stale += 1
            if stale >= config.patience:
                logger.info(f"Early stop at epoch {epoch}: no improvement for {config.patience} epochs")
                stopped_early = True
                break

    weights.load_state(best_state)
    return TrainResult(weights, history, best_epoch, stopped_early)


def train(weights: NetworkWeights, dataset: Sequence[CaseRecord], config: TrainConfig,
          target: str = "defect", validation: Sequence[CaseRecord] = (),
          on_epoch: Optional[Callable[[EpochRecord], None]] = None) -> TrainResult:
    """Train the network to map defective skulls to ``target`` grids of preprocessed cases."""
    samples = [case_sample(case, target) for case in dataset]
    val_samples = [case_sample(case, target) for case in validation]
    logger.info(f"Training on {len(samples)} cases ({len(val_samples)} validation), target={target}")
    return train_samples(weights, samples, config, val_samples, on_epoch, [c.case_id for c in dataset])


def write_loss_history(history: Sequence[EpochRecord], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(("epoch", "lr", "train_loss", "val_loss"))
        for record in history:
            writer.writerow([record.epoch, f"{record.lr:.8g}", f"{record.train_loss:.8f}",
                             "" if record.val_loss is None else f"{record.val_loss:.8f}"])
    return path
