"""Batch-embed a JSONL corpus with a pretrained sentence encoder and write
the vectors in the MDRE binary format.

MDRE layout (little-endian): magic "MDRE", version u32 = 1, dim u32,
count u64, count x (id_len u32, id bytes UTF-8), count x dim float32
row-major. Row order equals corpus file order.
"""

from __future__ import annotations

import json
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"MDRE"
VERSION = 1

QUERY_MAX_TOKENS = 70
PASSAGE_MAX_TOKENS = 300


class ModelLoadError(Exception):
    pass


class MalformedCorpus(Exception):
    def __init__(self, path, line_no: int, reason: str):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = str(path)
        self.line_no = line_no


@dataclass(frozen=True)
class ExportJob:
    model: str                      # model identifier or local path
    input_path: str                 # JSONL with {"id","text",...}
    output_path: str                # MDRE file to write
    batch_size: int = 32
    max_tokens: int = PASSAGE_MAX_TOKENS

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")


def read_corpus_jsonl(path: str | Path) -> tuple[list[str], list[str]]:
    """Return (ids, texts) in file order; extra keys are ignored."""
    path = Path(path)
    if not path.is_file():
        raise MalformedCorpus(path, 0, "file not found")
    ids: list[str] = []
    texts: list[str] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedCorpus(path, line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict) or not isinstance(record.get("id"), str) \
                    or not isinstance(record.get("text"), str):
                raise MalformedCorpus(path, line_no, "need string 'id' and 'text'")
            if record["id"] in seen:
                raise MalformedCorpus(path, line_no, f"duplicate id {record['id']!r}")
            seen.add(record["id"])
            ids.append(record["id"])
            texts.append(record["text"])
    return ids, texts


def write_mdre(ids: list[str], values: np.ndarray, path: str | Path) -> None:
    """Atomic MDRE write (temp file + rename)."""
    values = np.ascontiguousarray(values, dtype="<f4")
    if values.ndim != 2 or values.shape[0] != len(ids):
        raise ValueError(f"values shape {values.shape} does not match {len(ids)} ids")
    if not np.all(np.isfinite(values)):
        raise ValueError("refusing to write non-finite embeddings")
    parts = [MAGIC, struct.pack("<IIQ", VERSION, values.shape[1], len(ids))]
    for pid in ids:
        raw = pid.encode("utf-8")
        parts.append(struct.pack("<I", len(raw)))
        parts.append(raw)
    parts.append(values.tobytes(order="C"))
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(b"".join(parts))
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _load_model(name: str):
    try:
        from sentence_transformers import SentenceTransformer
        return SentenceTransformer(name)
    except Exception as exc:
        raise ModelLoadError(f"cannot load model {name!r}: {exc}") from exc


def export_embeddings(job: ExportJob) -> tuple[int, int]:
    """Run the export; returns (count, dim).

    Texts are deduplicated before inference so identical texts always get
    bit-identical rows regardless of how batches fall, and inference runs
    single-threaded in inference mode so re-exports are bit-identical.
    """
    import torch

    ids, texts = read_corpus_jsonl(job.input_path)
    model = _load_model(job.model)
    model.max_seq_length = job.max_tokens
    dim_of = getattr(model, "get_embedding_dimension", None) \
        or model.get_sentence_embedding_dimension
    dim = int(dim_of())

    unique_texts = sorted(set(texts))
    n_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        with torch.inference_mode():
            unique_vecs = model.encode(
                unique_texts,
                batch_size=job.batch_size,
                convert_to_numpy=True,
                normalize_embeddings=False,
                show_progress_bar=False,
            )
    finally:
        torch.set_num_threads(n_threads)
    if texts:
        unique_vecs = np.asarray(unique_vecs, dtype=np.float32)
        row_of = {text: i for i, text in enumerate(unique_texts)}
        values = unique_vecs[[row_of[t] for t in texts]]
    else:
        values = np.zeros((0, dim), dtype=np.float32)

    write_mdre(ids, values, job.output_path)
    return len(ids), dim
