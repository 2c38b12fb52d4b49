"""Binary on-disk formats (little-endian throughout).

Embedding file (magic "MDRE"):
    magic 4s | version u32 = 1 | dim u32 | count u64
    count x (id_len u32, id bytes UTF-8)
    count x dim float32, row-major

Encoder checkpoint (magic "MDRW"):
    magic 4s | version u32 = 1 | out_dim u32 | n_buckets u32 | seed u64
    out_dim x n_buckets float32, row-major

Version 1 checkpoints imply the default lowercasing featurizer.
All writes are atomic (temp file + rename) so interrupted runs never
leave truncated files behind.
"""

from __future__ import annotations

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

from .encoder import EmbeddingMatrix, LinearEncoder
from .errors import DuplicateId, MagicMismatch, TruncatedFile, VersionUnsupported
from .features import FeaturizerConfig

EMBEDDING_MAGIC = b"MDRE"
ENCODER_MAGIC = b"MDRW"
FORMAT_VERSION = 1


def write_atomic(path: str | Path, payload: bytes) -> None:
    """Write bytes via a temp file in the target directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _read_exact(fh, n: int, path: Path, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise TruncatedFile(path, f"while reading {what}")
    return data


def write_embeddings(matrix: EmbeddingMatrix, path: str | Path) -> None:
    if not np.all(np.isfinite(matrix.values)):
        raise ValueError("refusing to write non-finite embeddings")
    parts = [EMBEDDING_MAGIC,
             struct.pack("<IIQ", FORMAT_VERSION, matrix.dim, len(matrix.ids))]
    for pid in matrix.ids:
        raw = pid.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    values = np.ascontiguousarray(matrix.values, dtype="<f4")
    parts.append(values.tobytes(order="C"))
    write_atomic(path, b"".join(parts))


def read_embeddings(path: str | Path, corpus_id: str = "") -> EmbeddingMatrix:
    """Load an embedding file; `corpus_id` is carried by the manifest, not the file."""
    path = Path(path)
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, path, "magic")
        if magic != EMBEDDING_MAGIC:
            raise MagicMismatch(EMBEDDING_MAGIC, magic)
        version, dim, count = struct.unpack("<IIQ", _read_exact(fh, 16, path, "header"))
        if version != FORMAT_VERSION:
            raise VersionUnsupported(version)
        ids = []
        seen: set[str] = set()
        for _ in range(count):
            (id_len,) = struct.unpack("<I", _read_exact(fh, 4, path, "id length"))
            pid = _read_exact(fh, id_len, path, "id bytes").decode("utf-8")
            if pid in seen:
                raise DuplicateId(pid)
            seen.add(pid)
            ids.append(pid)
        raw = _read_exact(fh, count * dim * 4, path, "embedding rows")
        if fh.read(1):
            raise TruncatedFile(path, "trailing bytes after embedding rows")
    values = np.frombuffer(raw, dtype="<f4").reshape(count, dim).copy()
    return EmbeddingMatrix(corpus_id=corpus_id, dim=dim, ids=ids, values=values)


def write_encoder(encoder: LinearEncoder, path: str | Path) -> None:
    if not encoder.featurizer.lowercase:
        raise ValueError("version 1 checkpoints imply lowercase=True")
    if encoder.seed < 0:
        raise ValueError("encoder seed must be non-negative for checkpointing")
    header = ENCODER_MAGIC + struct.pack(
        "<IIIQ", FORMAT_VERSION, encoder.out_dim, encoder.featurizer.n_buckets,
        encoder.seed,
    )
    values = np.ascontiguousarray(encoder.weights, dtype="<f4")
    write_atomic(path, header + values.tobytes(order="C"))


def read_encoder(path: str | Path) -> LinearEncoder:
    path = Path(path)
    with open(path, "rb") as fh:
        magic = _read_exact(fh, 4, path, "magic")
        if magic != ENCODER_MAGIC:
            raise MagicMismatch(ENCODER_MAGIC, magic)
        version, out_dim, n_buckets, seed = struct.unpack(
            "<IIIQ", _read_exact(fh, 20, path, "header"))
        if version != FORMAT_VERSION:
            raise VersionUnsupported(version)
        raw = _read_exact(fh, out_dim * n_buckets * 4, path, "weights")
        if fh.read(1):
            raise TruncatedFile(path, "trailing bytes after weights")
    weights = np.frombuffer(raw, dtype="<f4").reshape(out_dim, n_buckets).copy()
    return LinearEncoder(
        featurizer=FeaturizerConfig(n_buckets=n_buckets),
        out_dim=out_dim,
        weights=weights,
        seed=seed,
    )
