import json
import os

import numpy as np
import pytest

from oodkit.errors import (
    DigestError,
    MagicError,
    NonFinitePayloadError,
    SidecarError,
    SizeMismatchError,
    ValidationError,
    VersionError,
)
from oodkit.features import FeatureSet
from oodkit.oodf import inspect_header, read_feature_file, sidecar_path, write_feature_file
from oodkit.rng import make_rng

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


def random_feature_set(rng, with_all=False):
    n = int(rng.integers(1, 40))
    d = int(rng.integers(1, 12))
    kwargs = {"features": rng.standard_normal((n, d)).astype(np.float32)}
    if with_all or rng.random() < 0.5:
        c = int(rng.integers(2, 6))
        p = int(rng.integers(1, 8))
        pen = rng.standard_normal((n, p)).astype(np.float32)
        w = rng.standard_normal((c, p)).astype(np.float32)
        b = rng.standard_normal(c).astype(np.float32)
        kwargs.update(
            logits=pen @ w.T + b,
            penultimate=pen,
            head_weights=w,
            head_bias=b,
            labels=rng.integers(0, c, size=n),
        )
    elif rng.random() < 0.5:
        kwargs["logits"] = rng.standard_normal((n, 3)).astype(np.float32)
        kwargs["labels"] = rng.integers(0, 3, size=n)
    kwargs["meta"] = {"source": "roundtrip", "split": "t", "seed": int(rng.integers(100))}
    return FeatureSet(**kwargs)


class TestRoundTrip:
    def test_minimal_matrix(self, tmp_path):
        fs = FeatureSet(features=np.array([[1, 2], [3, 4], [5, 6]], dtype=np.float32))
        path = str(tmp_path / "m.oodf")
        write_feature_file(fs, path)
        back = read_feature_file(path)
        assert back.equals(fs)

    def test_fifty_randomized_sets(self, tmp_path):
        rng = make_rng(42)
        for i in range(50):
            fs = random_feature_set(rng, with_all=(i % 3 == 0))
            path = str(tmp_path / f"r{i}.oodf")
            digest = write_feature_file(fs, path)
            assert digest.startswith("sha256:")
            back = read_feature_file(path)
            assert back.equals(fs), f"round-trip mismatch on set {i}"

    def test_rewrite_same_content_same_digest(self, tmp_path):
        rng = make_rng(1)
        fs = random_feature_set(rng, with_all=True)
        d1 = write_feature_file(fs, str(tmp_path / "a.oodf"))
        d2 = write_feature_file(fs, str(tmp_path / "b.oodf"))
        assert d1 == d2


class TestErrorKinds:
    def write_sample(self, tmp_path):
        rng = make_rng(2)
        fs = random_feature_set(rng, with_all=True)
        path = str(tmp_path / "s.oodf")
        write_feature_file(fs, path)
        return path

    def test_truncated_payload(self, tmp_path):
        path = self.write_sample(tmp_path)
        raw = open(path, "rb").read()
        open(path, "wb").write(raw[:-7])
        with pytest.raises(SizeMismatchError):
            read_feature_file(path)

    def test_bad_magic(self, tmp_path):
        path = self.write_sample(tmp_path)
        raw = bytearray(open(path, "rb").read())
        raw[:4] = b"NOPE"
        open(path, "wb").write(bytes(raw))
        with pytest.raises(MagicError):
            read_feature_file(path)

    def test_bad_version(self, tmp_path):
        path = self.write_sample(tmp_path)
        raw = bytearray(open(path, "rb").read())
        raw[4:6] = (99).to_bytes(2, "little")
        open(path, "wb").write(bytes(raw))
        with pytest.raises(VersionError):
            read_feature_file(path)

    def test_single_corrupted_payload_byte_raises_digest_error(self, tmp_path):
        path = self.write_sample(tmp_path)
        raw = bytearray(open(path, "rb").read())
        for offset in (24, len(raw) // 2, len(raw) - 1):
            corrupted = bytearray(raw)
            corrupted[offset] ^= 0x41
            open(path, "wb").write(bytes(corrupted))
            with pytest.raises(DigestError):
                read_feature_file(path)

    def test_missing_sidecar(self, tmp_path):
        path = self.write_sample(tmp_path)
        os.unlink(sidecar_path(path))
        with pytest.raises(SidecarError):
            read_feature_file(path)

    def test_malformed_sidecar(self, tmp_path):
        path = self.write_sample(tmp_path)
        open(sidecar_path(path), "w").write("{not json")
        with pytest.raises(SidecarError):
            read_feature_file(path)

    def test_non_finite_payload(self, tmp_path):
        # Craft a file whose digest is valid but whose payload holds an inf.
        import hashlib
        import struct

        header = struct.pack("<4sHHIIII", b"OODF", 1, 0, 2, 2, 0, 0)
        payload = np.array([1.0, np.inf, 3.0, 4.0], dtype="<f4").tobytes()
        data = header + payload
        path = str(tmp_path / "inf.oodf")
        open(path, "wb").write(data)
        sidecar = {"format": "oodf", "version": 1,
                   "digest": "sha256:" + hashlib.sha256(data).hexdigest()}
        open(sidecar_path(path), "w").write(json.dumps(sidecar))
        with pytest.raises(NonFinitePayloadError):
            read_feature_file(path)

    def test_nonfinite_rejected_at_construction(self):
        with pytest.raises(ValidationError):
            FeatureSet(features=np.array([[np.nan, 1.0]], dtype=np.float32))


class TestGoldenBytes:
    """Pinned byte-level fixture: guards the little-endian layout."""

    def test_header_bytes(self):
        raw = open(os.path.join(DATA_DIR, "golden.oodf"), "rb").read()
        assert raw[:4] == b"OODF"
        assert int.from_bytes(raw[4:6], "little") == 1
        assert int.from_bytes(raw[6:8], "little") == 0b1111  # all blocks
        assert int.from_bytes(raw[8:12], "little") == 3  # n_rows
        assert int.from_bytes(raw[12:16], "little") == 3  # feat_dim
        assert int.from_bytes(raw[16:20], "little") == 2  # n_classes
        assert int.from_bytes(raw[20:24], "little") == 2  # penult_dim
        assert len(raw) == 144

    def test_logical_values(self):
        fs = read_feature_file(os.path.join(DATA_DIR, "golden.oodf"))
        assert fs.features.tolist() == [
            [0.5, -1.5, 2.25], [3.0, 0.0, -0.125], [1.0, 2.0, 3.0]
        ]
        assert fs.penultimate.tolist() == [[1.0, 2.0], [3.0, 4.0], [5.0, 6.5]]
        assert fs.head_weights.tolist() == [[0.5, -1.0], [2.0, 0.25]]
        assert fs.head_bias.tolist() == [0.125, -0.5]
        assert fs.logits.tolist() == [[-1.375, 2.0], [-2.375, 6.5], [-3.875, 11.125]]
        assert fs.labels.tolist() == [0, 1, 1]
        assert fs.meta["source"] == "golden-fixture"

    def test_recorded_digest(self):
        with open(os.path.join(DATA_DIR, "golden.oodf.json")) as f:
            sidecar = json.load(f)
        assert sidecar["digest"] == (
            "sha256:7ec72a22e69b2a012a8b18c05c76eaf229089606d096c618ae75d537c8273a8a"
        )


class TestInspect:
    def test_header_fields(self, tmp_path):
        rng = make_rng(3)
        fs = random_feature_set(rng, with_all=True)
        path = str(tmp_path / "h.oodf")
        write_feature_file(fs, path)
        h = inspect_header(path)
        assert h["magic"] == "OODF"
        assert h["n_rows"] == fs.n_rows
        assert h["flags"]["labels"] is True
