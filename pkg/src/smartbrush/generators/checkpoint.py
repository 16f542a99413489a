"""Versioned binary model container: magic, header JSON (arch, config,
named slice table), then raw float32 parameter data."""

from __future__ import annotations

import dataclasses
import json
import struct
from pathlib import Path

import numpy as np

from . import GeneratorConfig, GeneratorModel

MAGIC = b"SBCK"
CHECKPOINT_VERSION = 1


def save_checkpoint(model: GeneratorModel, path: str | Path) -> None:
    if not hasattr(model, "parameter_vector"):
        raise ValueError(f"generator kind {model.kind!r} has no parameters to checkpoint")
    vector = model.parameter_vector()
    header = {
        "version": CHECKPOINT_VERSION,
        "arch": model.kind,
        "config": dataclasses.asdict(model.config),
        "dtype": "float32",
        "slices": [
            {"name": name, "shape": list(shape), "offset": offset}
            for name, shape, offset in model.parameter_slices()
        ],
        "parameter_count": int(vector.size),
    }
    blob = json.dumps(header).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        fh.write(vector.astype("<f4").tobytes())


def load_checkpoint(path: str | Path) -> GeneratorModel:
    from .brushgan import ToyBrushGAN
    from .diffusion import ToyBrushCLDM

    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != MAGIC:
            raise ValueError(f"not a model checkpoint: bad magic {magic!r}")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        data = np.frombuffer(fh.read(), dtype="<f4")

    if data.size != header["parameter_count"]:
        raise ValueError(
            f"checkpoint truncated: {data.size} values, expected {header['parameter_count']}"
        )
    config = GeneratorConfig(**header["config"])
    arch = header["arch"]
    if arch == "brushgan":
        model = ToyBrushGAN(config)
    elif arch == "brushcldm":
        model = ToyBrushCLDM(config)
    else:
        raise ValueError(f"unknown checkpoint arch {arch!r}")
    model.load_parameter_vector(data)
    return model
