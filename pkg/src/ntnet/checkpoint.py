"""NTNT checkpoint container.

Layout::

    b"NTNT" | u32 version | u64 manifest length | manifest (UTF-8 JSON) | payload

The payload holds every tensor as little-endian float32, row-major, in
manifest order.
"""
from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass, field
from typing import Dict

import numpy as np

from .nets import Denoiser, Module, Translator
from .rand import Prng

MAGIC = b"NTNT"
VERSION = 1
_HEADER = struct.Struct("<4sIQ")


class CheckpointError(ValueError):
    pass


@dataclass
class ModelCheckpoint:
    kind: str
    architecture: dict
    tensors: Dict[str, np.ndarray]
    config: dict = field(default_factory=dict)
    iteration: int = 0
    meta: dict = field(default_factory=dict)

    def manifest(self) -> dict:
        index, offset = [], 0
        for name, arr in self.tensors.items():
            index.append({"name": name, "shape": list(arr.shape), "offset": offset})
            offset += int(arr.size)
        return {"kind": self.kind, "format_version": VERSION, "architecture": self.architecture,
                "config": self.config, "iteration": self.iteration, "meta": self.meta,
                "tensors": index}

    def to_bytes(self) -> bytes:
        man = json.dumps(self.manifest(), sort_keys=True, separators=(",", ":")).encode("utf-8")
        payload = b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes() for a in self.tensors.values())
        return _HEADER.pack(MAGIC, VERSION, len(man)) + man + payload

    @classmethod
    def from_bytes(cls, blob: bytes) -> "ModelCheckpoint":
        if len(blob) < _HEADER.size:
            raise CheckpointError("checkpoint truncated before header")
        magic, version, mlen = _HEADER.unpack_from(blob)
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r}")
        if version != VERSION:
            raise CheckpointError(f"unsupported checkpoint version {version}")
        start = _HEADER.size
        try:
            man = json.loads(blob[start:start + mlen].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise CheckpointError(f"corrupt manifest: {exc}") from None
        payload = blob[start + mlen:]
        total = sum(int(np.prod(t["shape"], dtype=np.int64)) for t in man["tensors"])
        if len(payload) != 4 * total:
            raise CheckpointError(f"payload is {len(payload)} bytes, manifest expects {4 * total}")
        flat = np.frombuffer(payload, dtype="<f4")
        tensors = {}
        for t in man["tensors"]:
            n = int(np.prod(t["shape"], dtype=np.int64))
            tensors[t["name"]] = flat[t["offset"]:t["offset"] + n].reshape(t["shape"]).astype(np.float32)
        return cls(man["kind"], man["architecture"], tensors, man.get("config", {}),
                   man.get("iteration", 0), man.get("meta", {}))

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ModelCheckpoint":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def from_model(model: Module, kind: str, config: dict = None, iteration: int = 0, meta: dict = None) -> ModelCheckpoint:
    tensors = {k: p.data.astype(np.float32) for k, p in model.named_parameters().items()}
    return ModelCheckpoint(kind, model.hparams(), tensors, config or {}, iteration, meta or {})


def build_model(ckpt: ModelCheckpoint) -> Module:
    a = ckpt.architecture
    if ckpt.kind == "denoiser":
        model = Denoiser(Prng(0), a["channels"], a["width"], a["depth"], a["blocks"], a["middle_blocks"])
    elif ckpt.kind == "translator":
        model = Translator(Prng(0), a["channels"], a["width"], a["depth"], a["sigma_tilde"],
                           a["blocks"], a["middle_blocks"])
    else:
        raise CheckpointError(f"unknown checkpoint kind {ckpt.kind!r}")
    model.load_arrays(ckpt.tensors)
    return model


def params_digest(model: Module) -> str:
    h = hashlib.sha256()
    for name, p in model.named_parameters().items():
        h.update(name.encode())
        h.update(np.ascontiguousarray(p.data).tobytes())
    return h.hexdigest()
