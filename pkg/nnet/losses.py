"""
Soft Dice loss: ``1 - 2·Σ(p·t) / (Σp + Σt + α)`` averaged over the batch.
"""

from typing import Union

import numpy as np

from nnet.tensor import Tensor, as_tensor
from volume.errors import ShapeMismatch

DEFAULT_ALPHA = 1.0


def soft_dice_loss(pred: Tensor, target: Union[Tensor, np.ndarray], alpha: float = DEFAULT_ALPHA,
                   per_channel: bool = False) -> Tensor:
    """Batch-mean soft Dice loss.

    With ``per_channel`` each channel is scored separately and the channel
    losses are averaged; otherwise channels are pooled per sample.
    """
    target = as_tensor(target, pred.dtype)
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction {pred.shape} and target {target.shape} differ")
    if pred.data.ndim < 2:
        raise ShapeMismatch(f"expected (N, C, ...) tensors, got {pred.shape}")
    axes = tuple(range(2 if per_channel else 1, pred.data.ndim))
    intersection = (pred * target).sum(axis=axes)
    denominator = pred.sum(axis=axes) + target.sum(axis=axes) + alpha
    return 1.0 - (intersection * 2.0 / denominator).mean()
