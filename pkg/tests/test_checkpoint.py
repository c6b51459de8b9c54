"""Checkpoint container: round trips, integrity checks, fault injection."""

import os

import numpy as np
import pytest

from advdepth.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    CheckpointCorruptionError,
    CheckpointError,
    CheckpointVersionError,
    load_checkpoint,
    save_checkpoint,
)


def sample_arrays(seed=0):
    rng = np.random.default_rng(seed)
    return {
        "conv.w": rng.normal(size=(4, 3, 3, 3)),
        "conv.b": rng.normal(size=4),
        "counts": rng.integers(0, 1000, size=7),
        "flags": rng.random(5) > 0.5,
        "depth16": rng.integers(0, 65535, size=(6, 6)).astype(np.uint16),
        "empty": np.zeros((0, 3)),
    }


def test_round_trip_is_bitwise(tmp_path):
    path = str(tmp_path / "a.ckpt")
    arrays = sample_arrays()
    meta = {"step": 12, "note": "hello", "history": [1.0, 0.5], "nested": {"k": 3}}
    save_checkpoint(path, arrays, meta)
    back, meta2 = load_checkpoint(path)
    assert meta2 == meta
    assert set(back) == set(arrays)
    for k in arrays:
        assert back[k].dtype == arrays[k].dtype, k
        assert back[k].shape == arrays[k].shape, k
        assert np.array_equal(back[k], arrays[k]), k


def test_save_is_deterministic(tmp_path):
    a, b = str(tmp_path / "a.ckpt"), str(tmp_path / "b.ckpt")
    save_checkpoint(a, sample_arrays(), {"x": 1})
    save_checkpoint(b, sample_arrays(), {"x": 1})
    assert open(a, "rb").read() == open(b, "rb").read()


def test_no_temp_files_left_behind(tmp_path):
    save_checkpoint(str(tmp_path / "a.ckpt"), sample_arrays())
    assert sorted(os.listdir(tmp_path)) == ["a.ckpt"]


def test_missing_file_raises_file_not_found(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_checkpoint(str(tmp_path / "nope.ckpt"))


def test_bad_magic_rejected(tmp_path):
    path = str(tmp_path / "a.ckpt")
    save_checkpoint(path, sample_arrays())
    blob = bytearray(open(path, "rb").read())
    blob[0] ^= 0xFF
    open(path, "wb").write(bytes(blob))
    with pytest.raises(CheckpointCorruptionError, match="magic"):
        load_checkpoint(path)


def test_version_mismatch_is_a_distinct_error(tmp_path):
    path = str(tmp_path / "a.ckpt")
    save_checkpoint(path, sample_arrays())
    blob = bytearray(open(path, "rb").read())
    blob[8:12] = (FORMAT_VERSION + 1).to_bytes(4, "little")
    open(path, "wb").write(bytes(blob))
    with pytest.raises(CheckpointVersionError, match="version"):
        load_checkpoint(path)
    assert issubclass(CheckpointVersionError, CheckpointError)
    assert issubclass(CheckpointCorruptionError, CheckpointError)


def test_manifest_bit_flip_detected(tmp_path):
    path = str(tmp_path / "a.ckpt")
    save_checkpoint(path, sample_arrays())
    blob = bytearray(open(path, "rb").read())
    blob[len(MAGIC) + 4 + 8 + 32 + 5] ^= 0x01  # inside the manifest JSON
    open(path, "wb").write(bytes(blob))
    with pytest.raises(CheckpointCorruptionError, match="manifest"):
        load_checkpoint(path)


def test_payload_bit_flip_detected(tmp_path):
    path = str(tmp_path / "a.ckpt")
    save_checkpoint(path, sample_arrays())
    blob = bytearray(open(path, "rb").read())
    blob[-3] ^= 0x10  # inside the last array's bytes
    open(path, "wb").write(bytes(blob))
    with pytest.raises(CheckpointCorruptionError, match="payload"):
        load_checkpoint(path)


def test_truncation_detected(tmp_path):
    path = str(tmp_path / "a.ckpt")
    save_checkpoint(path, sample_arrays())
    blob = open(path, "rb").read()
    for cut in (4, 30, len(blob) // 2, len(blob) - 1):
        open(path, "wb").write(blob[:cut])
        with pytest.raises(CheckpointCorruptionError):
            load_checkpoint(path)


def test_empty_arrays_and_meta(tmp_path):
    path = str(tmp_path / "a.ckpt")
    save_checkpoint(path, {})
    arrays, meta = load_checkpoint(path)
    assert arrays == {} and meta == {}
