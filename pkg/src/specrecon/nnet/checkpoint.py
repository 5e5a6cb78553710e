"""Binary checkpoint format.

Little-endian layout::

    b"RSPN"                      magic
    u32                          format version
    u32 n, n bytes               architecture JSON
    u32 count, arrays...         parameters
    u64                          Adam step counter
    u32 count, arrays...         Adam moments, named "m.<param>" / "v.<param>"
    u32 n, n bytes               training metadata JSON

Each array is ``u32 name_len, name (utf-8), u32 ndim, u64 dims[ndim],
f64 data[prod(dims)]`` in C order.
"""

from __future__ import annotations

import io
import json
import os
import struct

import numpy as np

from ..errors import BadMagic, TruncatedFile, VersionMismatch
from .adam import AdamState
from .model import RespecArch
from .train import ModelCheckpoint

MAGIC = b"RSPN"
VERSION = 1


def _json_bytes(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _write_arrays(buf, arrays):
    buf.write(struct.pack("<I", len(arrays)))
    for name, arr in arrays:
        a = np.ascontiguousarray(arr, dtype="<f8")
        nb = name.encode("utf-8")
        buf.write(struct.pack("<I", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<I", a.ndim))
        buf.write(struct.pack(f"<{a.ndim}Q", *a.shape))
        buf.write(a.tobytes())


def dumps(ck: ModelCheckpoint) -> bytes:
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<I", VERSION))
    arch = _json_bytes(ck.arch.to_dict())
    buf.write(struct.pack("<I", len(arch)))
    buf.write(arch)
    _write_arrays(buf, list(ck.params.items()))
    buf.write(struct.pack("<Q", ck.adam_state.step))
    moments = [(f"m.{k}", v) for k, v in ck.adam_state.m.items()]
    moments += [(f"v.{k}", v) for k, v in ck.adam_state.v.items()]
    _write_arrays(buf, moments)
    meta = _json_bytes(ck.train_meta)
    buf.write(struct.pack("<I", len(meta)))
    buf.write(meta)
    return buf.getvalue()


def save_checkpoint(ck: ModelCheckpoint, path) -> None:
    data = dumps(ck)
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(f"checkpoint ends at byte {len(self.data)}, needed {self.pos + n}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def arrays(self) -> dict:
        (count,) = self.unpack("<I")
        out = {}
        for _ in range(count):
            (n,) = self.unpack("<I")
            name = self.take(n).decode("utf-8")
            (ndim,) = self.unpack("<I")
            dims = self.unpack(f"<{ndim}Q") if ndim else ()
            size = int(np.prod(dims)) if ndim else 1
            out[name] = np.frombuffer(self.take(8 * size), dtype="<f8").reshape(dims).astype(np.float64)
        return out

    def json(self):
        (n,) = self.unpack("<I")
        return json.loads(self.take(n).decode("utf-8"))


def loads(data: bytes) -> ModelCheckpoint:
    if len(data) < 4:
        raise TruncatedFile("file is shorter than the magic header")
    if data[:4] != MAGIC:
        raise BadMagic(f"expected magic {MAGIC!r}, found {data[:4]!r}")
    r = _Reader(data)
    r.take(4)
    (version,) = r.unpack("<I")
    if version != VERSION:
        raise VersionMismatch(f"checkpoint version {version}, this build reads {VERSION}")
    arch = RespecArch.from_dict(r.json())
    params = r.arrays()
    (step,) = r.unpack("<Q")
    moments = r.arrays()
    meta = r.json()
    m = {k[2:]: v for k, v in moments.items() if k.startswith("m.")}
    v = {k[2:]: v for k, v in moments.items() if k.startswith("v.")}
    return ModelCheckpoint(arch, params, AdamState(m, v, int(step)), meta)


def load_checkpoint(path) -> ModelCheckpoint:
    with open(path, "rb") as fh:
        return loads(fh.read())
