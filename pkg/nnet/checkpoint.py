"""
Weight checkpoints.

Layout (little-endian): 4-byte magic, u16 version, u32 header length, an
orjson header (kind, descriptor, parameter table) and the raw parameter
blobs in table order.
"""

import hashlib
import logging
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Callable, Dict, Tuple, Union

import numpy as np
import orjson

from nnet.tensor import parameter
from nnet.unet import NetworkWeights, UNetDescriptor, build_unet
from volume.errors import CorruptFile, MissingFile

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
NETWORK_MAGIC = b"CDRW"
_PREFIX = struct.Struct("<4sHI")
_DTYPES = {"float32": "<f4", "float64": "<f8"}


def save_parameters(path: Union[str, Path], magic: bytes, kind: str, descriptor: dict,
                    parameters: Dict[str, np.ndarray], extra: dict = None) -> Path:
    path = Path(path)
    table, blobs, offset = [], [], 0
    for name, array in parameters.items():
        dtype = _DTYPES[np.dtype(array.dtype).name]
        blob = np.ascontiguousarray(array, dtype=dtype).tobytes()
        table.append({"name": name, "shape": list(array.shape), "dtype": dtype, "offset": offset, "nbytes": len(blob)})
        blobs.append(blob)
        offset += len(blob)
    header = orjson.dumps({"kind": kind, "descriptor": descriptor, "parameters": table, "extra": extra or {}},
                          option=orjson.OPT_SORT_KEYS)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = _PREFIX.pack(magic, FORMAT_VERSION, len(header)) + header + b"".join(blobs)
    path.write_bytes(payload)
    logger.info(f"Saved {kind} checkpoint {path} ({len(table)} tensors, sha256={hashlib.sha256(payload).hexdigest()[:12]})")
    return path


def load_parameters(path: Union[str, Path], magic: bytes) -> Tuple[dict, "OrderedDict[str, np.ndarray]"]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"checkpoint not found: {path}")
    raw = path.read_bytes()
    if len(raw) < _PREFIX.size:
        raise CorruptFile(f"{path}: truncated checkpoint")
    found, version, header_len = _PREFIX.unpack_from(raw)
    if found != magic:
        raise CorruptFile(f"{path}: bad magic {found!r}, expected {magic!r}")
    if version != FORMAT_VERSION:
        raise CorruptFile(f"{path}: unsupported checkpoint version {version}")
    start = _PREFIX.size + header_len
    try:
        header = orjson.loads(raw[_PREFIX.size:start])
    except orjson.JSONDecodeError as e:
        raise CorruptFile(f"{path}: unreadable checkpoint header: {e}") from e
    arrays: "OrderedDict[str, np.ndarray]" = OrderedDict()
    for entry in header["parameters"]:
        begin = start + entry["offset"]
        end = begin + entry["nbytes"]
        if end > len(raw):
            raise CorruptFile(f"{path}: parameter {entry['name']} runs past the end of the file")
        array = np.frombuffer(raw[begin:end], dtype=entry["dtype"]).reshape(entry["shape"])
        arrays[entry["name"]] = array.astype(np.dtype(entry["dtype"]).newbyteorder("="))
    return header, arrays


def save_weights(weights: NetworkWeights, path: Union[str, Path], extra: dict = None) -> Path:
    return save_parameters(path, NETWORK_MAGIC, "unet", weights.descriptor.to_dict(), weights.state(), extra)


def restore(arrays, descriptor, factory: Callable):
    params = OrderedDict((name, parameter(array, name)) for name, array in arrays.items())
    return factory(descriptor, params)


def load_weights(path: Union[str, Path]) -> NetworkWeights:
    header, arrays = load_parameters(path, NETWORK_MAGIC)
    if header.get("kind") != "unet":
        raise CorruptFile(f"{path}: checkpoint holds '{header.get('kind')}', not a U-Net")
    descriptor = UNetDescriptor.from_dict(header["descriptor"])
    weights = restore(arrays, descriptor, NetworkWeights)
    expected = set(build_unet(descriptor).parameters)
    if set(weights.parameters) != expected:
        raise CorruptFile(f"{path}: parameter names do not match descriptor {descriptor}")
    return weights


def read_extra(path: Union[str, Path], magic: bytes = NETWORK_MAGIC) -> dict:
    header, _ = load_parameters(path, magic)
    return header.get("extra", {})
