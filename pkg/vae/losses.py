"""
VAE objective: channel-mean reconstruction Dice, β-weighted KL divergence to
the standard normal prior, minus the Dice loss between the generated skull
and defect channels (which rewards the two channels for staying disjoint).
"""

from typing import Dict, Tuple, Union

import numpy as np

from nnet.losses import DEFAULT_ALPHA, soft_dice_loss
from nnet.tensor import Tensor, as_tensor
from volume.errors import ShapeMismatch

DEFAULT_BETA = 0.01

SKULL_CHANNEL = 0
DEFECT_CHANNEL = 1


def kl_divergence(mu: Tensor, log_var: Tensor) -> Tensor:
    """``-½·Σ_l (1 + log σ² − μ² − σ²)`` summed over the latent and averaged over the batch."""
    if mu.shape != log_var.shape or mu.data.ndim != 2:
        raise ShapeMismatch(f"mu {mu.shape} and log_var {log_var.shape} must be equal (N, L) arrays")
    per_sample = (log_var + 1.0 - mu * mu - log_var.exp()).sum(axis=1) * -0.5
    return per_sample.mean()


def vae_loss(pair: Union[Tensor, np.ndarray], generated: Tensor, mu: Tensor, log_var: Tensor,
             beta: float = DEFAULT_BETA, alpha: float = DEFAULT_ALPHA) -> Tuple[Tensor, Dict[str, float]]:
    """Total loss plus its terms as floats (``reconstruction``, ``kl``, ``disjoint``)."""
    pair = as_tensor(pair, generated.dtype)
    if generated.data.ndim != 5 or generated.shape[1] != 2:
        raise ShapeMismatch(f"generated volume must be (N, 2, D, H, W), got {generated.shape}")
    if pair.shape != generated.shape:
        raise ShapeMismatch(f"input pair {pair.shape} and generated {generated.shape} differ")
    reconstruction = soft_dice_loss(generated, pair, alpha, per_channel=True)
    kl = kl_divergence(mu, log_var)
    skull = generated[:, SKULL_CHANNEL:SKULL_CHANNEL + 1]
    defect = generated[:, DEFECT_CHANNEL:DEFECT_CHANNEL + 1]
    disjoint = soft_dice_loss(skull, defect, alpha)
    total = reconstruction + kl * beta - disjoint
    return total, {"reconstruction": reconstruction.item(), "kl": kl.item(), "disjoint": disjoint.item()}
