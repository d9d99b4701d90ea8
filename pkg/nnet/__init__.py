"""
Numpy network stack: reverse-mode tensors, volumetric layers, the residual
U-Net, soft Dice training and two-step inference.
"""

from nnet.checkpoint import load_weights, save_weights
from nnet.inference import (
    RefineResult, predict_probabilities, prepare_refinement_pair, reconstruct, refine, refinement_geometry,
)
from nnet.layers import conv3d, group_norm, linear, upsample2
from nnet.losses import soft_dice_loss
from nnet.tensor import Tensor, concat, parameter
from nnet.trainer import EpochRecord, TrainConfig, TrainResult, train, train_samples, write_loss_history
from nnet.unet import NetworkWeights, UNetDescriptor, build_unet, forward, parameter_count

__all__ = [
    "load_weights", "save_weights",
    "RefineResult", "predict_probabilities", "prepare_refinement_pair", "reconstruct", "refine",
    "refinement_geometry",
    "conv3d", "group_norm", "linear", "upsample2",
    "soft_dice_loss",
    "Tensor", "concat", "parameter",
    "EpochRecord", "TrainConfig", "TrainResult", "train", "train_samples", "write_loss_history",
    "NetworkWeights", "UNetDescriptor", "build_unet", "forward", "parameter_count",
]
