"""Binary checkpoint files.

Layout (all integers little-endian)::

    b"PFCK"                      magic
    u32 version                  currently 1
    u32 n                        length of the config block
    n bytes                      UTF-8 JSON: {"model": ModelConfig, "step": int, "meta": {...}}
    u32 count                    number of tensors
    count x tensor:
        u16 name length, name (UTF-8)
        u32 ndim, ndim x u32 dims
        prod(dims) x f32 data (row-major)

Model weights come first in declaration order, then (when an optimizer is
saved) ``adam.m/<name>`` and ``adam.v/<name>`` for each weight.
"""
from __future__ import annotations

import io
import json
import os
import struct

import numpy as np

from .errors import CheckpointError
from .model import ModelConfig, ModelState, param_shapes
from .nncore import Adam, Tensor

MAGIC = b"PFCK"
VERSION = 1


def _write_tensor(buf, name: str, arr: np.ndarray):
    raw = name.encode()
    buf.write(struct.pack("<H", len(raw)))
    buf.write(raw)
    buf.write(struct.pack("<I", arr.ndim))
    buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
    buf.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())


def _read_exact(f, n):
    data = f.read(n)
    if len(data) != n:
        raise CheckpointError("truncated checkpoint")
    return data


def _read_tensor(f):
    (nlen,) = struct.unpack("<H", _read_exact(f, 2))
    name = _read_exact(f, nlen).decode()
    (ndim,) = struct.unpack("<I", _read_exact(f, 4))
    shape = struct.unpack(f"<{ndim}I", _read_exact(f, 4 * ndim))
    count = int(np.prod(shape)) if ndim else 1
    arr = np.frombuffer(_read_exact(f, 4 * count), dtype="<f4").reshape(shape)
    return name, arr.astype(np.float32)


def dumps(state: ModelState, optimizer: Adam | None = None, meta: dict | None = None) -> bytes:
    buf = io.BytesIO()
    block = {"model": state.config.to_dict(), "step": state.step,
             "meta": meta if meta is not None else state.meta}
    if optimizer is not None:
        block["adam"] = {"step": optimizer.step_count, "lr": optimizer.lr,
                         "betas": [optimizer.beta1, optimizer.beta2], "eps": optimizer.eps}
    cfg = json.dumps(block, sort_keys=True).encode()
    buf.write(MAGIC)
    buf.write(struct.pack("<II", VERSION, len(cfg)))
    buf.write(cfg)
    tensors = [(k, v.data) for k, v in state.params.items()]
    if optimizer is not None:
        names = list(state.params)
        tensors += [("adam.m/" + k, m) for k, m in zip(names, optimizer.m)]
        tensors += [("adam.v/" + k, v) for k, v in zip(names, optimizer.v)]
    buf.write(struct.pack("<I", len(tensors)))
    for name, arr in tensors:
        _write_tensor(buf, name, arr)
    return buf.getvalue()


def save(path, state: ModelState, optimizer: Adam | None = None, meta: dict | None = None):
    """Atomically write a checkpoint (temp file + rename)."""
    data = dumps(state, optimizer, meta)
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except OSError as e:
        raise CheckpointError(f"cannot write checkpoint {path}: {e}") from e


def loads(data: bytes):
    """Parse checkpoint bytes into ``(state, optimizer_or_None)``."""
    f = io.BytesIO(data)
    if _read_exact(f, 4) != MAGIC:
        raise CheckpointError("not a checkpoint file (bad magic)")
    version, n = struct.unpack("<II", _read_exact(f, 8))
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    block = json.loads(_read_exact(f, n).decode())
    config = ModelConfig(**block["model"])
    (count,) = struct.unpack("<I", _read_exact(f, 4))
    tensors = dict(_read_tensor(f) for _ in range(count))
    params = {}
    for name, shape in param_shapes(config):
        if name not in tensors:
            raise CheckpointError(f"checkpoint is missing tensor {name}")
        arr = tensors[name]
        if arr.shape != shape:
            raise CheckpointError(f"tensor {name} has shape {arr.shape}, expected {shape}")
        params[name] = Tensor(arr.copy(), requires_grad=True, name=name)
    state = ModelState(config, params, int(block.get("step", 0)), block.get("meta", {}))
    optimizer = None
    if "adam" in block:
        a = block["adam"]
        optimizer = Adam(state.parameters(), lr=a["lr"], betas=tuple(a["betas"]), eps=a["eps"])
        optimizer.step_count = int(a["step"])
        optimizer.m = [tensors["adam.m/" + k].copy() for k in params]
        optimizer.v = [tensors["adam.v/" + k].copy() for k in params]
    return state, optimizer


def load(path):
    try:
        with open(path, "rb") as f:
            data = f.read()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    return loads(data)
