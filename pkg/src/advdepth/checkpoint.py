"""Single-file checkpoint container with integrity checks.

Layout (all integers little-endian):

    bytes 0..7    magic b"ADVDCKPT"
    bytes 8..11   format version (u32)
    bytes 12..19  manifest length in bytes (u64)
    bytes 20..51  SHA-256 of the manifest bytes
    manifest      UTF-8 JSON: {"meta": ..., "arrays": [...], "payload_sha256": ...}
    payload       the arrays' raw little-endian bytes, back to back

Each manifest array entry records name, dtype, shape and byte offset into the
payload, so a reader can reconstruct every array exactly. Writes go to a
temporary file in the destination directory followed by an atomic rename, so
an interrupted save never leaves a half-written checkpoint behind. Loads
verify magic, version, manifest hash and payload hash before returning.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile

import numpy as np

__all__ = [
    "MAGIC",
    "FORMAT_VERSION",
    "CheckpointError",
    "CheckpointVersionError",
    "CheckpointCorruptionError",
    "save_checkpoint",
    "load_checkpoint",
]

MAGIC = b"ADVDCKPT"
FORMAT_VERSION = 1
_HEADER = len(MAGIC) + 4 + 8 + 32


class CheckpointError(Exception):
    """Base class for checkpoint read/write failures."""


class CheckpointVersionError(CheckpointError):
    """The file is a valid container but from an incompatible format version."""


class CheckpointCorruptionError(CheckpointError):
    """The file fails a structural or cryptographic integrity check."""


def _le(dtype: np.dtype) -> np.dtype:
    return dtype.newbyteorder("<") if dtype.byteorder == ">" else dtype


def save_checkpoint(path: str, arrays: dict[str, np.ndarray], meta: dict | None = None):
    """Write arrays + JSON-serializable meta to path atomically."""
    entries = []
    chunks = []
    offset = 0
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        arr = arr.astype(_le(arr.dtype), copy=False)
        raw = arr.tobytes()
        entries.append({
            "name": name,
            "dtype": arr.dtype.str,
            "shape": list(arr.shape),
            "offset": offset,
            "nbytes": len(raw),
        })
        chunks.append(raw)
        offset += len(raw)
    payload = b"".join(chunks)
    manifest = json.dumps({
        "meta": meta or {},
        "arrays": entries,
        "payload_sha256": hashlib.sha256(payload).hexdigest(),
    }).encode("utf-8")

    blob = b"".join([
        MAGIC,
        FORMAT_VERSION.to_bytes(4, "little"),
        len(manifest).to_bytes(8, "little"),
        hashlib.sha256(manifest).digest(),
        manifest,
        payload,
    ])
    out_dir = os.path.dirname(os.path.abspath(path))
    os.makedirs(out_dir, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=out_dir, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(blob)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_checkpoint(path: str) -> tuple[dict[str, np.ndarray], dict]:
    """Read arrays + meta back; raises typed errors on mismatch or damage."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER or blob[: len(MAGIC)] != MAGIC:
        raise CheckpointCorruptionError(f"{path} is not a checkpoint (bad magic)")
    version = int.from_bytes(blob[8:12], "little")
    if version != FORMAT_VERSION:
        raise CheckpointVersionError(
            f"{path} has format version {version}, this reader supports "
            f"{FORMAT_VERSION}")
    man_len = int.from_bytes(blob[12:20], "little")
    man_hash = blob[20:52]
    manifest_raw = blob[_HEADER : _HEADER + man_len]
    if len(manifest_raw) != man_len:
        raise CheckpointCorruptionError(f"{path} is truncated inside the manifest")
    if hashlib.sha256(manifest_raw).digest() != man_hash:
        raise CheckpointCorruptionError(f"{path} manifest hash mismatch")
    try:
        manifest = json.loads(manifest_raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointCorruptionError(f"{path} manifest is not valid JSON: {e}")

    payload = blob[_HEADER + man_len :]
    if hashlib.sha256(payload).hexdigest() != manifest["payload_sha256"]:
        raise CheckpointCorruptionError(f"{path} payload hash mismatch")

    arrays = {}
    for entry in manifest["arrays"]:
        start, n = entry["offset"], entry["nbytes"]
        raw = payload[start : start + n]
        if len(raw) != n:
            raise CheckpointCorruptionError(
                f"{path} payload is truncated at array {entry['name']!r}")
        arrays[entry["name"]] = np.frombuffer(
            raw, dtype=np.dtype(entry["dtype"])
        ).reshape(entry["shape"]).copy()
    return arrays, manifest["meta"]
