"""MFWB1 weight-bundle serialization.

Layout (little-endian): magic ``MFWB1``, u32 version, u32 metadata
length + UTF-8 ``key=value`` lines, tensor directory (u32 count, then
per tensor: u32 name length + name, u8 dtype tag, u8 rank, u32 dims),
followed by raw float32 data in directory order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    FormatError,
    SpecMismatchError,
    TruncatedFileError,
    VersionError,
)
from .net import NetSpec, netspec_hash

_MAGIC = b"MFWB1"
_VERSION = 1
_DTYPE_F32 = 0


@dataclass
class WeightBundle:
    tensors: dict[str, np.ndarray]
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        for name, t in self.tensors.items():
            self.tensors[name] = np.ascontiguousarray(t, dtype=np.float32)

    def validate_against(self, spec: NetSpec):
        expected = spec.param_shapes()
        extra = sorted(set(self.tensors) - set(expected))
        missing = sorted(set(expected) - set(self.tensors))
        if extra:
            raise SpecMismatchError(f"orphan tensors not in spec: {extra}")
        if missing:
            raise SpecMismatchError(f"tensors missing from bundle: {missing}")
        for name, shape in expected.items():
            if tuple(self.tensors[name].shape) != shape:
                raise SpecMismatchError(
                    f"tensor {name}: bundle has {self.tensors[name].shape}, "
                    f"spec expects {shape}"
                )
        want = self.metadata.get("spec_sha256")
        if want is not None and want != netspec_hash(spec):
            raise SpecMismatchError(
                "bundle metadata spec hash does not match the provided net spec"
            )


def bundle_from_weights(weights: dict, spec: NetSpec, extra_meta: dict | None = None):
    meta = {"spec_sha256": netspec_hash(spec)}
    if extra_meta:
        meta.update({k: str(v) for k, v in extra_meta.items()})
    return WeightBundle(dict(weights), meta)


def save_bundle(bundle: WeightBundle, path):
    meta_text = "".join(f"{k}={v}\n" for k, v in sorted(bundle.metadata.items()))
    meta_blob = meta_text.encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", _VERSION))
        fh.write(struct.pack("<I", len(meta_blob)))
        fh.write(meta_blob)
        fh.write(struct.pack("<I", len(bundle.tensors)))
        for name, t in bundle.tensors.items():
            nb = name.encode("utf-8")
            fh.write(struct.pack("<I", len(nb)))
            fh.write(nb)
            fh.write(struct.pack("<BB", _DTYPE_F32, t.ndim))
            fh.write(struct.pack(f"<{t.ndim}I", *t.shape))
        for t in bundle.tensors.values():
            fh.write(t.astype("<f4").tobytes())


class _Reader:
    def __init__(self, blob: bytes, path):
        self.blob = blob
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.blob):
            raise TruncatedFileError(
                f"{self.path}: truncated at byte {self.pos} (needed {n} more)"
            )
        out = self.blob[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u8(self) -> int:
        return self.take(1)[0]


def load_bundle(path) -> WeightBundle:
    with open(path, "rb") as fh:
        blob = fh.read()
    r = _Reader(blob, path)
    if r.take(len(_MAGIC)) != _MAGIC:
        raise FormatError(f"{path}: bad magic, not an MFWB1 file")
    version = r.u32()
    if version != _VERSION:
        raise VersionError(f"{path}: format version {version}, supported: {_VERSION}")
    meta_blob = r.take(r.u32())
    metadata = {}
    for line in meta_blob.decode("utf-8").splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            metadata[k] = v
    n_tensors = r.u32()
    directory = []
    for _ in range(n_tensors):
        name = r.take(r.u32()).decode("utf-8")
        dtype_tag = r.u8()
        if dtype_tag != _DTYPE_F32:
            raise FormatError(f"{path}: unsupported dtype tag {dtype_tag}")
        rank = r.u8()
        dims = struct.unpack(f"<{rank}I", r.take(4 * rank))
        directory.append((name, dims))
    tensors = {}
    for name, dims in directory:
        count = int(np.prod(dims)) if dims else 1
        raw = r.take(4 * count)
        tensors[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
    return WeightBundle(tensors, metadata)
