"""Export pretrained sentence-encoder embeddings into the MDRE format."""

from .exporter import (
    ExportJob,
    MalformedCorpus,
    ModelLoadError,
    export_embeddings,
    read_corpus_jsonl,
    write_mdre,
)

__version__ = "0.1.0"

__all__ = [
    "ExportJob", "MalformedCorpus", "ModelLoadError",
    "export_embeddings", "read_corpus_jsonl", "write_mdre",
]
