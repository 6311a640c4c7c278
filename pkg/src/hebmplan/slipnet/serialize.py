"""Versioned binary weights container.

Layout: magic b"HEBM1"; uint32 array count; then per array a shape-table
entry (uint16 name length, utf-8 name, uint8 ndim, uint32 dims) followed at
the end of the table by all payloads as little-endian float64, in table
order. Normalization scalers ride along as the arrays ``norm_mean`` and
``norm_scale``. Round-trips bitwise.
"""
from __future__ import annotations

import struct

import numpy as np

from .network import WEIGHT_KEYS, WEIGHT_SHAPES, Normalizer

MAGIC = b"HEBM1"


def save_weights(path, weights: dict, normalizer: Normalizer):
    entries = [(k, np.ascontiguousarray(weights[k], dtype="<f8"))
               for k in WEIGHT_KEYS]
    entries.append(("norm_mean", np.ascontiguousarray(normalizer.mean, "<f8")))
    entries.append(("norm_scale", np.ascontiguousarray(normalizer.scale, "<f8")))
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", len(entries)))
        for name, arr in entries:
            encoded = name.encode()
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        for _, arr in entries:
            fh.write(arr.tobytes())


def load_weights(path) -> tuple[dict, Normalizer]:
    with open(path, "rb") as fh:
        if fh.read(len(MAGIC)) != MAGIC:
            raise ValueError(f"{path}: not a {MAGIC.decode()} weights file")
        (count,) = struct.unpack("<I", fh.read(4))
        table = []
        for _ in range(count):
            (name_len,) = struct.unpack("<H", fh.read(2))
            name = fh.read(name_len).decode()
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            table.append((name, shape))
        arrays = {}
        for name, shape in table:
            n = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(fh.read(8 * n), dtype="<f8").reshape(shape)
            arrays[name] = data.astype(np.float64)

    weights = {}
    for key in WEIGHT_KEYS:
        if key not in arrays:
            raise ValueError(f"{path}: missing array {key}")
        if arrays[key].shape != WEIGHT_SHAPES[key]:
            raise ValueError(f"{path}: bad shape for {key}")
        weights[key] = arrays[key]
    normalizer = Normalizer(arrays["norm_mean"], arrays["norm_scale"])
    return weights, normalizer
