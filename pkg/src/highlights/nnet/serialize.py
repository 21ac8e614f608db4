"""Binary model file format.

Layout: 8-byte magic ``NNMODEL1``, little-endian uint32 header length,
UTF-8 JSON header (spec, label map, metadata, weight manifest), then the
raw little-endian float32 weight data in manifest order. Weights are
quantized to float32 on save; buffers (batch-norm running statistics)
are stored the same way.
"""

from __future__ import annotations

import json
import os
import struct

import numpy as np

from ..errors import FormatVersionMismatch, IoError, WeightShapeMismatch
from .network import Network, NetworkSpec
from .train import ModelArtifact

MAGIC = b"NNMODEL1"
FORMAT_VERSION = 1


def save_model(artifact: ModelArtifact, path: str) -> None:
    net = artifact.network
    manifest = []
    blobs = []
    for ln, pn, p in net.parameters():
        arr = np.asarray(p, dtype="<f4")
        manifest.append({"layer": ln, "name": pn, "shape": list(p.shape), "kind": "param"})
        blobs.append(arr.tobytes())
    for ln, bn, b in net.buffers():
        arr = np.asarray(b, dtype="<f4")
        manifest.append({"layer": ln, "name": bn, "shape": list(b.shape), "kind": "buffer"})
        blobs.append(arr.tobytes())
    header = {
        "format_version": FORMAT_VERSION,
        "spec": artifact.spec.to_dict(),
        "label_map": {str(k): v for k, v in artifact.label_map.items()},
        "metadata": artifact.metadata,
        "weights": manifest,
    }
    payload = json.dumps(header, sort_keys=True).encode("utf-8")
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", len(payload)))
        f.write(payload)
        for blob in blobs:
            f.write(blob)
    os.replace(tmp, path)


def load_model(path: str) -> ModelArtifact:
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise IoError(str(e)) from e
    if len(data) < 12 or data[:8] != MAGIC:
        raise IoError(f"not a model file: {path}")
    (header_len,) = struct.unpack("<I", data[8:12])
    if len(data) < 12 + header_len:
        raise IoError(f"truncated model file: {path}")
    header = json.loads(data[12 : 12 + header_len].decode("utf-8"))
    if header["format_version"] > FORMAT_VERSION:
        raise FormatVersionMismatch(header["format_version"], FORMAT_VERSION)
    spec = NetworkSpec.from_dict(header["spec"])
    net = Network(spec, np.random.default_rng(0))

    offset = 12 + header_len
    params = {(ln, pn): p for ln, pn, p in net.parameters()}
    buffers = {(ln, bn): b for ln, bn, b in net.buffers()}
    for entry in header["weights"]:
        key = (entry["layer"], entry["name"])
        target = params.get(key) if entry["kind"] == "param" else buffers.get(key)
        if target is None:
            raise WeightShapeMismatch(f"unknown weight {key}")
        if list(target.shape) != entry["shape"]:
            raise WeightShapeMismatch(
                f"{key}: file shape {entry['shape']}, network shape {list(target.shape)}"
            )
        nbytes = int(np.prod(entry["shape"]) * 4)
        blob = data[offset : offset + nbytes]
        if len(blob) != nbytes:
            raise IoError(f"truncated weight data for {key}")
        target[...] = np.frombuffer(blob, dtype="<f4").reshape(target.shape)
        offset += nbytes
    if offset != len(data):
        raise WeightShapeMismatch(
            f"weight section has {len(data) - offset} unexpected trailing bytes"
        )
    return ModelArtifact(
        spec=spec,
        label_map={int(k): v for k, v in header["label_map"].items()},
        network=net,
        metadata=header["metadata"],
        format_version=header["format_version"],
    )
