"""The linear dual encoder and corpus embedding.

A single weight matrix (d x n_buckets) projects hashed bag-of-words
features to d-dimensional embeddings; queries and passages share it.
Embeddings are not length-normalized: retrieval scores are raw dot
products.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Corpus
from .features import FeaturizerConfig, FeatureVector, featurize
from .rng import gaussian_array

DEFAULT_DIM = 64


@dataclass
class LinearEncoder:
    featurizer: FeaturizerConfig
    out_dim: int
    weights: np.ndarray  # float32, shape (out_dim, n_buckets)
    seed: int

    def __post_init__(self):
        expected = (self.out_dim, self.featurizer.n_buckets)
        if self.weights.shape != expected:
            raise ValueError(f"weights shape {self.weights.shape} != {expected}")
        if self.weights.dtype != np.float32:
            raise ValueError("weights must be float32")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")


def init_encoder(
    featurizer: FeaturizerConfig | None = None,
    out_dim: int = DEFAULT_DIM,
    seed: int = 0,
) -> LinearEncoder:
    """Fresh encoder with zero-mean Gaussian weights of variance
    1/sqrt(n_buckets), which puts embeddings of unit-norm feature vectors
    at O(1) scale.

    The normals come from Box-Muller over SplitMix64 seeded with `seed`,
    filling the weight matrix row-major, so initialization is bit-stable
    everywhere.
    """
    featurizer = featurizer or FeaturizerConfig()
    n = out_dim * featurizer.n_buckets
    scale = featurizer.n_buckets ** -0.25  # sqrt of the variance
    flat = gaussian_array(seed, n) * scale
    weights = flat.astype(np.float32).reshape(out_dim, featurizer.n_buckets)
    return LinearEncoder(featurizer=featurizer, out_dim=out_dim, weights=weights, seed=seed)


def encode_features(encoder: LinearEncoder, features: FeatureVector) -> np.ndarray:
    """Project a sparse feature vector; returns float32 of length out_dim."""
    if features.nnz == 0:
        return np.zeros(encoder.out_dim, dtype=np.float32)
    cols = encoder.weights[:, features.indices].astype(np.float64)
    return (cols @ features.values).astype(np.float32)


def encode(encoder: LinearEncoder, text: str, max_tokens: int | None = None) -> np.ndarray:
    return encode_features(encoder, featurize(text, encoder.featurizer, max_tokens=max_tokens))


@dataclass
class EmbeddingMatrix:
    corpus_id: str
    dim: int
    ids: list[str]
    values: np.ndarray  # float32, shape (len(ids), dim), row i embeds ids[i]
    _row_of: dict[str, int] = field(init=False, repr=False)

    def __post_init__(self):
        if self.values.shape != (len(self.ids), self.dim):
            raise ValueError(
                f"values shape {self.values.shape} != ({len(self.ids)}, {self.dim})"
            )
        if self.values.dtype != np.float32:
            raise ValueError("values must be float32")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("embedding values must be finite")
        row_of = {}
        for i, pid in enumerate(self.ids):
            if pid in row_of:
                raise ValueError(f"duplicate id {pid!r} in embedding matrix")
            row_of[pid] = i
        self._row_of = row_of

    def __len__(self) -> int:
        return len(self.ids)

    def row(self, passage_id: str) -> np.ndarray:
        return self.values[self._row_of[passage_id]]

    def row_index(self, passage_id: str) -> int:
        return self._row_of[passage_id]


def embed_corpus(
    encoder: LinearEncoder,
    corpus: Corpus,
    max_tokens: int | None = None,
) -> EmbeddingMatrix:
    """One embedding row per passage, in corpus order."""
    values = np.empty((len(corpus), encoder.out_dim), dtype=np.float32)
    ids = []
    for i, passage in enumerate(corpus.passages):
        values[i] = encode(encoder, passage.text, max_tokens=max_tokens)
        ids.append(passage.id)
    return EmbeddingMatrix(corpus_id=corpus.corpus_id, dim=encoder.out_dim,
                           ids=ids, values=values)
