"""Binary weight container (.sgln): magic, version, length-prefixed keyed
tensors, trailing CRC32. Little-endian throughout, so files are portable.

Layout:
    "SGLN" | version u32 | entry count u32 | entries... | crc32 u32
    entry: key_len u32 | key utf-8 | dtype u8 (0=f32, 1=f64) | rank u32 |
           dims u32 x rank | raw little-endian scalars
"""

from __future__ import annotations

import os
import struct
import tempfile
import zlib

import numpy as np

MAGIC = b"SGLN"
VERSION = 1
_DTYPES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_TAGS = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


class CheckpointError(Exception):
    """Base class for checkpoint file problems."""


class BadMagicError(CheckpointError):
    pass


class VersionError(CheckpointError):
    pass


class CrcError(CheckpointError):
    pass


class TruncatedError(CheckpointError):
    pass


class KeyCollisionError(CheckpointError):
    pass


def _entry_array(value) -> np.ndarray:
    arr = np.asarray(getattr(value, "data", value))
    if arr.dtype not in _TAGS:
        arr = arr.astype(np.float32)
    if not arr.flags.c_contiguous:
        arr = np.ascontiguousarray(arr).reshape(arr.shape)
    return arr


def save(path, entries: dict) -> None:
    """Write named tensors atomically (temp file + rename)."""
    blob = bytearray()
    blob += MAGIC
    blob += struct.pack("<I", VERSION)
    blob += struct.pack("<I", len(entries))
    for key, value in entries.items():
        arr = _entry_array(value)
        key_bytes = key.encode("utf-8")
        blob += struct.pack("<I", len(key_bytes))
        blob += key_bytes
        blob += struct.pack("<B", _TAGS[arr.dtype])
        blob += struct.pack("<I", arr.ndim)
        blob += struct.pack(f"<{arr.ndim}I", *arr.shape)
        blob += arr.astype(arr.dtype.newbyteorder("<"), copy=False).tobytes()
    blob += struct.pack("<I", zlib.crc32(bytes(blob)))

    directory = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".sgln.tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise TruncatedError(
                f"file ends at byte {len(self.buf)}, needed {self.pos + n}"
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u8(self) -> int:
        return self.take(1)[0]


def load(path) -> dict:
    """Read back named numpy arrays; verifies magic, version, and CRC."""
    with open(path, "rb") as f:
        buf = f.read()
    if len(buf) < 4 + 4 + 4 + 4:
        raise TruncatedError(f"file too short ({len(buf)} bytes)")
    if buf[:4] != MAGIC:
        raise BadMagicError(f"bad magic {buf[:4]!r}, expected {MAGIC!r}")
    stored_crc = struct.unpack("<I", buf[-4:])[0]
    if zlib.crc32(buf[:-4]) != stored_crc:
        raise CrcError("CRC32 mismatch: file is corrupt")

    r = _Reader(buf[:-4])
    r.take(4)  # magic
    version = r.u32()
    if version != VERSION:
        raise VersionError(f"unsupported version {version}, expected {VERSION}")
    count = r.u32()
    entries: dict[str, np.ndarray] = {}
    for _ in range(count):
        key = r.take(r.u32()).decode("utf-8")
        dtype_tag = r.u8()
        if dtype_tag not in _DTYPES:
            raise CheckpointError(f"unknown dtype tag {dtype_tag} for key {key!r}")
        rank = r.u32()
        dims = tuple(r.u32() for _ in range(rank))
        n = int(np.prod(dims, initial=1))
        dtype = _DTYPES[dtype_tag]
        raw = r.take(n * dtype.itemsize)
        if key in entries:
            raise KeyCollisionError(f"duplicate key in file: {key!r}")
        entries[key] = np.frombuffer(raw, dtype=dtype).reshape(dims).copy()
    if r.pos != len(r.buf):
        raise CheckpointError(f"{len(r.buf) - r.pos} trailing bytes after last entry")
    return entries


def remap_keys(entries: dict, rule: dict) -> dict:
    """Rewrite key suffixes (e.g. weight_orig -> weight); values untouched.

    The rule maps old suffix to new suffix; a key matching several suffixes
    uses the longest. Raises on any resulting collision.
    """
    out: dict[str, np.ndarray] = {}
    collisions = []
    for key, value in entries.items():
        new_key = key
        for old in sorted(rule, key=len, reverse=True):
            if key.endswith(old):
                new_key = key[: -len(old)] + rule[old]
                break
        if new_key in out:
            collisions.append(new_key)
        out[new_key] = value
    if collisions:
        raise KeyCollisionError(f"remap would collide on keys: {sorted(set(collisions))}")
    return out


def list_keys(entries: dict):
    """(key, shape, count) rows in file order plus the total element count."""
    rows = [(key, tuple(np.shape(v)), int(np.size(v))) for key, v in entries.items()]
    total = sum(count for _, _, count in rows)
    return rows, total


def save_models(path, models: dict) -> None:
    """Serialize {prefix: module} pairs; empty prefix keeps raw keys."""
    entries: dict[str, np.ndarray] = {}
    for prefix, model in models.items():
        full_prefix = f"{prefix}." if prefix else ""
        for key, value in model.state_dict(full_prefix).items():
            if key in entries:
                raise KeyCollisionError(f"duplicate key across models: {key!r}")
            entries[key] = value
    save(path, entries)


def load_models(path, models: dict) -> dict:
    """Load a file produced by save_models back into live modules."""
    entries = load(path)
    for prefix, model in models.items():
        full_prefix = f"{prefix}." if prefix else ""
        model.load_state_dict(entries, prefix=full_prefix)
    return entries
