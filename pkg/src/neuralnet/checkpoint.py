"""
Checkpoint Module - Named MLPs in one file: JSON header plus float32 blob

Layout: b"OPLM", u32 little-endian header length, UTF-8 JSON header
{"version", "models": [{"name", "layers": [{"in", "out", "activation"}]}],
"metadata"}, then every model's parameters in header order (per layer W
then b) as little-endian float32.
"""
import json
import struct
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union
import logging

import numpy as np

from src.exceptions import FormatError
from src.neuralnet.mlp import Activation, DenseLayer, MlpModel

logger = logging.getLogger(__name__)

MAGIC = b"OPLM"
VERSION = 1
PREFIX = struct.Struct("<4sI")
FLOAT = np.dtype("<f4")

PathLike = Union[str, Path]


def checkpoint_bytes(models: Dict[str, MlpModel], metadata: Optional[Dict[str, Any]] = None) -> bytes:
    header = {
        "version": VERSION,
        "models": [{"name": name, "layers": model.describe()} for name, model in models.items()],
        "metadata": metadata or {},
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    blobs = []
    for model in models.values():
        for param in model.parameters():
            blobs.append(np.ascontiguousarray(param, dtype=FLOAT).tobytes())
    return PREFIX.pack(MAGIC, len(header_bytes)) + header_bytes + b"".join(blobs)


def models_from_bytes(data: bytes) -> Tuple[Dict[str, MlpModel], Dict[str, Any]]:
    if len(data) < PREFIX.size:
        raise FormatError("header", f"file has {len(data)} bytes, shorter than the checkpoint prefix")
    magic, header_len = PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise FormatError("magic", f"expected {MAGIC!r}, found {magic!r}")
    if PREFIX.size + header_len > len(data):
        raise FormatError("header", "declared header length runs past the end of the file")
    try:
        header = json.loads(data[PREFIX.size:PREFIX.size + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError("header", f"header is not valid JSON: {e}")
    if header.get("version") != VERSION:
        raise FormatError("version", f"unsupported checkpoint version {header.get('version')}")

    offset = PREFIX.size + header_len
    models: Dict[str, MlpModel] = {}
    try:
        for entry in header["models"]:
            layers = []
            for spec in entry["layers"]:
                fan_in, fan_out = int(spec["in"]), int(spec["out"])
                params = []
                for count, shape in ((fan_in * fan_out, (fan_in, fan_out)), (fan_out, (fan_out,))):
                    end = offset + count * FLOAT.itemsize
                    if end > len(data):
                        raise FormatError("file_size", "parameter blob is truncated")
                    params.append(np.frombuffer(data, dtype=FLOAT, count=count, offset=offset)
                                  .reshape(shape).astype(np.float32))
                    offset = end
                layers.append(DenseLayer(params[0], params[1], Activation(spec["activation"])))
            models[entry["name"]] = MlpModel(layers)
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError("header", f"malformed model description: {e}")

    if offset != len(data):
        raise FormatError("file_size", f"{len(data) - offset} trailing bytes after the parameter blob")
    return models, header.get("metadata", {})


def save_checkpoint(path: PathLike, models: Dict[str, MlpModel],
                    metadata: Optional[Dict[str, Any]] = None) -> Path:
    """
    Write named models and JSON-serializable metadata

    Args:
        path: Target file; parent directories are created
        models: Ordered name -> model mapping
        metadata: Extra header payload (normalization statistics, config)

    Returns:
        The written path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(checkpoint_bytes(models, metadata))
    logger.info(f"Saved checkpoint {path} ({', '.join(models)})")
    return path


def load_checkpoint(path: PathLike) -> Tuple[Dict[str, MlpModel], Dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    return models_from_bytes(path.read_bytes())
