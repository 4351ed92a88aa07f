"""Binary container for frame embeddings.

Layout, all little-endian:

    offset  size  field
    0       4     magic "EMB1"
    4       2     format version (currently 1)
    6       1     source kind code (0 = lld, 1 = wav2vec, 2 = bert)
    7       4     rows (frame count, u32)
    11      4     cols (embedding dim, u32)
    15      4     frame hop in milliseconds (f32)
    19      -     payload: rows * cols f32, row-major
    end-4   4     CRC32 of the payload bytes (u32)

The payload is float32 on disk and float64 in memory, so a write/read
round trip is exact only up to float32 quantization.
"""

import struct
import zlib

import numpy as np

from .errors import BadMagicError, ChecksumError, DataError, TruncatedError
from .frames import SOURCE_DIMS, FrameSequence

MAGIC = b"EMB1"
FORMAT_VERSION = 1
HEADER = struct.Struct("<4sHBIIf")
CRC = struct.Struct("<I")

KIND_TO_CODE = {"lld": 0, "wav2vec": 1, "bert": 2}
CODE_TO_KIND = {code: kind for kind, code in KIND_TO_CODE.items()}

assert HEADER.size == 19


def container_size(rows: int, cols: int) -> int:
    """Exact file size in bytes for a rows x cols container."""
    return HEADER.size + 4 * rows * cols + CRC.size


def write_container(path, seq: FrameSequence) -> None:
    """Write a FrameSequence to `path`. The FrameSequence constructor has
    already pinned rows >= 1 and cols == SOURCE_DIMS[source_kind]."""
    payload = np.ascontiguousarray(seq.frames, dtype="<f4").tobytes()
    header = HEADER.pack(MAGIC, FORMAT_VERSION, KIND_TO_CODE[seq.source_kind],
                         seq.num_frames, seq.dim, seq.frame_hop_ms)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(CRC.pack(zlib.crc32(payload)))


def read_header(path) -> dict:
    """Decode and validate the 19-byte header without touching the payload."""
    with open(path, "rb") as fh:
        raw = fh.read(HEADER.size)
    if len(raw) < HEADER.size:
        raise TruncatedError(f"{path}: {len(raw)} bytes is shorter than the "
                             f"{HEADER.size}-byte header")
    magic, version, code, rows, cols, hop_ms = HEADER.unpack(raw)
    if magic != MAGIC:
        raise BadMagicError(f"{path}: leading bytes {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported container version {version}")
    if code not in CODE_TO_KIND:
        raise DataError(f"{path}: unknown source kind code {code}")
    if rows == 0 or cols == 0:
        raise DataError(f"{path}: degenerate shape {rows} x {cols}")
    kind = CODE_TO_KIND[code]
    if cols != SOURCE_DIMS[kind]:
        raise DataError(f"{path}: {cols} columns but source kind {kind!r} "
                        f"requires {SOURCE_DIMS[kind]}")
    return {"version": version, "source_kind": kind, "rows": rows,
            "cols": cols, "frame_hop_ms": hop_ms}


def read_container(path) -> FrameSequence:
    """Read a container back into a FrameSequence, verifying the checksum."""
    info = read_header(path)
    rows, cols = info["rows"], info["cols"]
    payload_size = 4 * rows * cols
    expected = HEADER.size + payload_size + CRC.size
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) != expected:
        raise TruncatedError(f"{path}: {len(blob)} bytes, expected {expected} "
                             f"for a {rows} x {cols} container")
    payload = blob[HEADER.size:HEADER.size + payload_size]
    (stored_crc,) = CRC.unpack(blob[HEADER.size + payload_size:])
    actual_crc = zlib.crc32(payload)
    if stored_crc != actual_crc:
        raise ChecksumError(f"{path}: payload CRC {actual_crc:#010x} does not "
                            f"match stored {stored_crc:#010x}")
    frames = np.frombuffer(payload, dtype="<f4").astype(np.float64)
    return FrameSequence(frames.reshape(rows, cols),
                         frame_hop_ms=float(info["frame_hop_ms"]),
                         source_kind=info["source_kind"])
