"""
VAE checkpoints in the network checkpoint layout under their own magic.
"""

from pathlib import Path
from typing import Union

from nnet.checkpoint import load_parameters, restore, save_parameters
from nnet.unet import NetworkWeights
from vae.model import VaeDescriptor, build_vae
from volume.errors import CorruptFile

VAE_MAGIC = b"CDRV"


def save_vae(weights: NetworkWeights, path: Union[str, Path], extra: dict = None) -> Path:
    return save_parameters(path, VAE_MAGIC, "vae", weights.descriptor.to_dict(), weights.state(), extra)


def load_vae(path: Union[str, Path]) -> NetworkWeights:
    header, arrays = load_parameters(path, VAE_MAGIC)
    if header.get("kind") != "vae":
        raise CorruptFile(f"{path}: checkpoint holds '{header.get('kind')}', not a VAE")
    descriptor = VaeDescriptor.from_dict(header["descriptor"])
    weights = restore(arrays, descriptor, NetworkWeights)
    reference = build_vae(descriptor).parameters
    if {n: t.shape for n, t in weights} != {n: t.shape for n, t in reference.items()}:
        raise CorruptFile(f"{path}: parameters do not match descriptor {descriptor}")
    return weights
