"""Hashed bag-of-words featurization.

Tokens are maximal runs of ASCII alphanumerics (after lowercasing when
enabled); each token is bucketed by FNV-1a 64 of its UTF-8 bytes modulo
the bucket count. Counts are L2-normalized unless asked otherwise.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

_TOKEN_RE = re.compile(r"[0-9A-Za-z]+")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    """FNV-1a 64-bit hash."""
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    if lowercase:
        text = text.lower()
    return _TOKEN_RE.findall(text)


@dataclass(frozen=True)
class FeaturizerConfig:
    n_buckets: int = 32768
    lowercase: bool = True

    def __post_init__(self):
        if self.n_buckets < 2 or self.n_buckets & (self.n_buckets - 1):
            raise ValueError(f"n_buckets must be a power of two >= 2, got {self.n_buckets}")


@dataclass(frozen=True)
class FeatureVector:
    """Sparse vector over hash buckets: sorted unique indices + values."""
    n_buckets: int
    indices: np.ndarray  # int64, strictly increasing
    values: np.ndarray   # float64, parallel to indices

    @property
    def nnz(self) -> int:
        return len(self.indices)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.n_buckets, dtype=np.float64)
        dense[self.indices] = self.values
        return dense


def bucket_of(token: str, n_buckets: int) -> int:
    return fnv1a64(token.encode("utf-8")) % n_buckets


def featurize(
    text: str,
    config: FeaturizerConfig,
    normalize: bool = True,
    max_tokens: int | None = None,
) -> FeatureVector:
    """Hashed term counts for `text`; empty/untokenizable text gives a zero vector.

    `max_tokens` truncates the token stream before counting (used for the
    query/passage length caps during training).
    """
    tokens = tokenize(text, config.lowercase)
    if max_tokens is not None:
        tokens = tokens[:max_tokens]
    counts: dict[int, float] = {}
    for token in tokens:
        b = bucket_of(token, config.n_buckets)
        counts[b] = counts.get(b, 0.0) + 1.0
    if not counts:
        return FeatureVector(config.n_buckets,
                             np.empty(0, dtype=np.int64),
                             np.empty(0, dtype=np.float64))
    indices = np.array(sorted(counts), dtype=np.int64)
    values = np.array([counts[i] for i in indices], dtype=np.float64)
    if normalize:
        values = values / np.linalg.norm(values)
    return FeatureVector(config.n_buckets, indices, values)
