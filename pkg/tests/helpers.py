from __future__ import annotations

import numpy as np

from mdretrieve.encoder import EmbeddingMatrix
from mdretrieve.search import ScoredHit


def make_matrix(corpus_id: str, vectors, ids=None) -> EmbeddingMatrix:
    values = np.asarray(vectors, dtype=np.float32)
    if ids is None:
        ids = [f"{corpus_id.lower()}{i}" for i in range(len(values))]
    return EmbeddingMatrix(corpus_id=corpus_id, dim=values.shape[1],
                           ids=list(ids), values=values)


def make_hits(corpus_id: str, scored) -> list[ScoredHit]:
    """Build a correctly ordered ranked list from (pid, score) pairs."""
    hits = [ScoredHit(corpus_id, pid, float(s)) for pid, s in scored]
    return sorted(hits, key=lambda h: (-h.score, h.corpus_id, h.passage_id))


def random_matrix(rng: np.random.Generator, corpus_id: str, n: int, dim: int):
    values = rng.standard_normal((n, dim)).astype(np.float32)
    return make_matrix(corpus_id, values)
