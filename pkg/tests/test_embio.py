"""Tests for the EMB1 embedding container."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from serkit.embio import (
    FORMAT_VERSION,
    HEADER,
    container_size,
    read_container,
    read_header,
    write_container,
)
from serkit.errors import BadMagicError, ChecksumError, DataError, TruncatedError
from serkit.frames import SOURCE_DIMS, FrameSequence


def make_seq(kind: str, rows: int, seed: int = 0) -> FrameSequence:
    rng = np.random.default_rng(seed)
    data = rng.standard_normal((rows, SOURCE_DIMS[kind])).astype(np.float32)
    return FrameSequence(data.astype(np.float64), frame_hop_ms=25.0,
                         source_kind=kind)


@pytest.mark.parametrize("kind", sorted(SOURCE_DIMS))
def test_round_trip_exact_for_float32_data(tmp_path, kind):
    seq = make_seq(kind, rows=7)
    path = tmp_path / "x.emb1"
    write_container(path, seq)
    back = read_container(path)
    np.testing.assert_array_equal(back.frames, seq.frames)
    assert back.source_kind == kind
    assert back.frame_hop_ms == 25.0
    assert back.frames.dtype == np.float64


def test_round_trip_quantizes_to_float32(tmp_path):
    rng = np.random.default_rng(3)
    data = rng.standard_normal((5, 34))
    seq = FrameSequence(data, frame_hop_ms=10.0, source_kind="lld")
    path = tmp_path / "q.emb1"
    write_container(path, seq)
    back = read_container(path)
    np.testing.assert_array_equal(back.frames,
                                  data.astype(np.float32).astype(np.float64))


def test_file_size_formula(tmp_path):
    seq = make_seq("wav2vec", rows=498)
    path = tmp_path / "w.emb1"
    write_container(path, seq)
    assert path.stat().st_size == container_size(498, 512) == 1019927

    small = make_seq("lld", rows=3)
    path2 = tmp_path / "s.emb1"
    write_container(path2, small)
    assert path2.stat().st_size == 19 + 3 * 34 * 4 + 4


def test_header_readable_without_payload(tmp_path):
    seq = make_seq("lld", rows=4)
    path = tmp_path / "h.emb1"
    write_container(path, seq)
    blob = path.read_bytes()
    path.write_bytes(blob[: HEADER.size + 8])

    info = read_header(path)
    assert info == {"version": FORMAT_VERSION, "source_kind": "lld",
                    "rows": 4, "cols": 34, "frame_hop_ms": 25.0}
    with pytest.raises(TruncatedError):
        read_container(path)


def test_truncated_header_rejected(tmp_path):
    path = tmp_path / "t.emb1"
    path.write_bytes(b"EMB1\x01\x00")
    with pytest.raises(TruncatedError):
        read_header(path)


def test_bad_magic_rejected(tmp_path):
    seq = make_seq("lld", rows=2)
    path = tmp_path / "m.emb1"
    write_container(path, seq)
    blob = bytearray(path.read_bytes())
    blob[:4] = b"RIFF"
    path.write_bytes(bytes(blob))
    with pytest.raises(BadMagicError):
        read_container(path)


def test_unsupported_version_rejected(tmp_path):
    seq = make_seq("lld", rows=2)
    path = tmp_path / "v.emb1"
    write_container(path, seq)
    blob = bytearray(path.read_bytes())
    blob[4] = 9
    path.write_bytes(bytes(blob))
    with pytest.raises(DataError):
        read_header(path)


def test_unknown_source_code_rejected(tmp_path):
    seq = make_seq("lld", rows=2)
    path = tmp_path / "k.emb1"
    write_container(path, seq)
    blob = bytearray(path.read_bytes())
    blob[6] = 7
    path.write_bytes(bytes(blob))
    with pytest.raises(DataError):
        read_header(path)


def test_dim_mismatch_with_kind_rejected(tmp_path):
    # Declare wav2vec (needs 512 columns) on a 34-column payload.
    seq = make_seq("lld", rows=2)
    path = tmp_path / "d.emb1"
    write_container(path, seq)
    blob = bytearray(path.read_bytes())
    blob[6] = 1
    path.write_bytes(bytes(blob))
    with pytest.raises(DataError):
        read_header(path)


def test_every_single_byte_flip_after_header_is_detected(tmp_path):
    seq = make_seq("lld", rows=1)
    path = tmp_path / "flip.emb1"
    write_container(path, seq)
    original = path.read_bytes()
    assert len(original) == 19 + 136 + 4
    for pos in range(HEADER.size, len(original)):
        corrupted = bytearray(original)
        corrupted[pos] ^= 0xFF
        path.write_bytes(bytes(corrupted))
        with pytest.raises(ChecksumError):
            read_container(path)


def test_truncated_payload_rejected(tmp_path):
    seq = make_seq("lld", rows=3)
    path = tmp_path / "p.emb1"
    write_container(path, seq)
    blob = path.read_bytes()
    for cut in (len(blob) - 1, len(blob) - 5, HEADER.size + 1):
        path.write_bytes(blob[:cut])
        with pytest.raises(TruncatedError):
            read_container(path)


def test_extra_trailing_bytes_rejected(tmp_path):
    seq = make_seq("lld", rows=3)
    path = tmp_path / "x.emb1"
    write_container(path, seq)
    path.write_bytes(path.read_bytes() + b"\x00")
    with pytest.raises(TruncatedError):
        read_container(path)


@settings(max_examples=30, deadline=None)
@given(rows=st.integers(min_value=1, max_value=6),
       hop=st.floats(min_value=1.0, max_value=100.0,
                     allow_nan=False, allow_infinity=False, width=32),
       seed=st.integers(min_value=0, max_value=2**32 - 1))
def test_round_trip_property(tmp_path_factory, rows, hop, seed):
    rng = np.random.default_rng(seed)
    data = (rng.standard_normal((rows, 34)) * 10.0 ** rng.integers(-6, 6)
            ).astype(np.float32)
    seq = FrameSequence(data.astype(np.float64), frame_hop_ms=float(hop),
                        source_kind="lld")
    path = tmp_path_factory.mktemp("emb") / "prop.emb1"
    write_container(path, seq)
    back = read_container(path)
    np.testing.assert_array_equal(back.frames, seq.frames)
    assert back.frame_hop_ms == pytest.approx(float(hop), rel=1e-6)
