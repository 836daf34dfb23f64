"""JSON header + float32 sidecar format for :class:`FcNet`."""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .fcnet import FcNet, Layer

NET_VERSION = 1


def net_to_document(net: FcNet, meta: dict[str, Any] | None = None,
                    weights_file: str = "net.bin") -> tuple[dict, bytes]:
    chunks, layers, offset = [], [], 0
    for l in net.layers:
        w = np.ascontiguousarray(l.weight, dtype="<f4").ravel()
        b = np.ascontiguousarray(l.bias, dtype="<f4").ravel()
        layers.append({"in": l.in_dim, "out": l.out_dim, "activation": l.activation,
                       "frozen": l.frozen, "offset": offset})
        chunks += [w.tobytes(), b.tobytes()]
        offset += w.size + b.size
    doc = {"version": NET_VERSION, "weights_file": weights_file, "layers": layers,
           "meta": meta or {}}
    return doc, b"".join(chunks)


def net_from_document(doc: dict, blob: bytes) -> FcNet:
    if doc.get("version") != NET_VERSION:
        raise ValueError(f"unsupported net version {doc.get('version')!r}")
    flat = np.frombuffer(blob, dtype="<f4").astype(np.float64)
    layers = []
    for spec in doc["layers"]:
        o, n_in, n_out = spec["offset"], spec["in"], spec["out"]
        w = flat[o:o + n_in * n_out].reshape(n_out, n_in)
        b = flat[o + n_in * n_out:o + n_in * n_out + n_out]
        layers.append(Layer(w.copy(), b.copy(), spec["activation"], spec.get("frozen", False)))
    return FcNet(layers)


def save_net(net: FcNet, path: str | Path, meta: dict | None = None) -> Path:
    path = Path(path)
    sidecar = path.with_suffix(".bin")
    doc, blob = net_to_document(net, meta, sidecar.name)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True))
    sidecar.write_bytes(blob)
    return path


def load_net(path: str | Path) -> tuple[FcNet, dict]:
    path = Path(path)
    doc = json.loads(path.read_text())
    blob = (path.parent / doc["weights_file"]).read_bytes()
    return net_from_document(doc, blob), doc.get("meta", {})
