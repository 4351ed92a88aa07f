"""EMB1 container writer, independent of the consuming toolkit.

Layout (little-endian): magic "EMB1", version u16, source-kind u8
(0 = lld, 1 = wav2vec, 2 = bert), rows u32, cols u32, frame hop ms f32,
then the row-major f32 payload, then CRC32 of the payload as u32.
"""

import struct
import zlib

import numpy as np

from .errors import UtteranceError

MAGIC = b"EMB1"
VERSION = 1
HEADER = struct.Struct("<4sHBIIf")
CRC = struct.Struct("<I")
KIND_CODES = {"lld": 0, "wav2vec": 1, "bert": 2}
CODE_KINDS = {code: kind for kind, code in KIND_CODES.items()}


def write_emb1(path, matrix: np.ndarray, kind: str, hop_ms: float) -> None:
    matrix = np.ascontiguousarray(matrix, dtype=np.float32)
    if matrix.ndim != 2 or matrix.shape[0] < 1 or matrix.shape[1] < 1:
        raise UtteranceError(f"cannot store matrix of shape {matrix.shape}")
    if not np.isfinite(matrix).all():
        raise UtteranceError("matrix contains non-finite values")
    payload = matrix.tobytes(order="C")
    header = HEADER.pack(MAGIC, VERSION, KIND_CODES[kind],
                         matrix.shape[0], matrix.shape[1], float(hop_ms))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)
        fh.write(CRC.pack(zlib.crc32(payload)))


def read_emb1(path):
    """Decode one container; returns (matrix, kind, hop_ms)."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size + CRC.size:
        raise UtteranceError(f"{path}: too short to be a container")
    magic, version, code, rows, cols, hop_ms = HEADER.unpack_from(raw)
    if magic != MAGIC or version != VERSION or code not in CODE_KINDS:
        raise UtteranceError(f"{path}: bad container header")
    expected = HEADER.size + 4 * rows * cols + CRC.size
    if len(raw) != expected:
        raise UtteranceError(f"{path}: size {len(raw)}, expected {expected}")
    payload = raw[HEADER.size : HEADER.size + 4 * rows * cols]
    (crc,) = CRC.unpack_from(raw, len(raw) - CRC.size)
    if crc != zlib.crc32(payload):
        raise UtteranceError(f"{path}: checksum mismatch")
    matrix = np.frombuffer(payload, dtype="<f4").reshape(rows, cols)
    return matrix, CODE_KINDS[code], hop_ms


def container_is_valid(path) -> bool:
    """True iff the file decodes cleanly; drives idempotent skipping."""
    try:
        read_emb1(path)
    except (OSError, UtteranceError):
        return False
    return True
