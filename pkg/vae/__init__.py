"""
Variational autoencoder for generating additional training cases.
"""

from vae.checkpoint import VAE_MAGIC, load_vae, save_vae
from vae.generate import decode_latents, generate_cases, raw_overlap
from vae.losses import DEFAULT_BETA, kl_divergence, vae_loss
from vae.model import VaeDescriptor, build_vae, decode, encode, reparameterize, vae_forward
from vae.trainer import VaeEpochRecord, VaeTrainConfig, VaeTrainResult, case_pair, train_vae

__all__ = [
    "VAE_MAGIC", "load_vae", "save_vae",
    "decode_latents", "generate_cases", "raw_overlap",
    "DEFAULT_BETA", "kl_divergence", "vae_loss",
    "VaeDescriptor", "build_vae", "decode", "encode", "reparameterize", "vae_forward",
    "VaeEpochRecord", "VaeTrainConfig", "VaeTrainResult", "case_pair", "train_vae",
]
