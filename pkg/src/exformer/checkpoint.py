"""Deterministic binary checkpoint container.

Layout: 8-byte magic, little-endian u64 header length, minified sorted-key JSON
header describing the arrays, then the raw little-endian buffers in header
order. Identical inputs produce byte-identical files, which the reproducibility
tests rely on.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import torch

MAGIC = b"XFCHKPT1"
FORMAT_VERSION = 1


def save_checkpoint(path: str | Path, arrays: dict[str, np.ndarray], meta: dict | None = None) -> None:
    entries = []
    blobs = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        blob = arr.tobytes()
        entries.append(
            {"dtype": str(arr.dtype), "name": name, "nbytes": len(blob), "offset": offset, "shape": list(arr.shape)}
        )
        blobs.append(blob)
        offset += len(blob)
    header = {"arrays": entries, "format_version": FORMAT_VERSION, "meta": meta or {}}
    payload = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(len(payload).to_bytes(8, "little"))
        fh.write(payload)
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such checkpoint: {path}")
    data = path.read_bytes()
    if data[: len(MAGIC)] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint file")
    header_len = int.from_bytes(data[8:16], "little")
    try:
        header = json.loads(data[16 : 16 + header_len])
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: corrupt checkpoint header") from exc
    if header.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {header.get('format_version')}")
    base = 16 + header_len
    arrays = {}
    for entry in header["arrays"]:
        start = base + entry["offset"]
        buf = data[start : start + entry["nbytes"]]
        if len(buf) != entry["nbytes"]:
            raise ValueError(f"{path}: truncated checkpoint ({entry['name']})")
        arrays[entry["name"]] = (
            np.frombuffer(buf, dtype=np.dtype(entry["dtype"])).reshape(entry["shape"]).copy()
        )
    return arrays, header["meta"]


def module_arrays(module: torch.nn.Module, prefix: str = "") -> dict[str, np.ndarray]:
    """A module's state dict as named numpy arrays, ready for save_checkpoint."""
    return {prefix + name: tensor.detach().cpu().numpy().copy() for name, tensor in module.state_dict().items()}


def load_module_arrays(module: torch.nn.Module, arrays: dict[str, np.ndarray], prefix: str = "") -> None:
    """Restore a module from checkpoint arrays; missing or extra keys raise."""
    state = {
        name[len(prefix) :]: torch.as_tensor(arr) for name, arr in arrays.items() if name.startswith(prefix)
    }
    module.load_state_dict(state, strict=True)
