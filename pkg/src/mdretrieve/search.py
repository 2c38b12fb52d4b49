"""Exact dot-product scoring and deterministic top-k selection.

The ranking order used everywhere is total: score descending, then
corpus_id ascending, then passage_id ascending. top_k is defined to equal
the k-prefix of a full sort under that order.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

import numpy as np

from .encoder import EmbeddingMatrix
from .errors import DimensionMismatch


@dataclass(frozen=True)
class ScoredHit:
    corpus_id: str
    passage_id: str
    score: float


def hit_sort_key(hit: ScoredHit):
    return (-hit.score, hit.corpus_id, hit.passage_id)


RankedList = list  # list[ScoredHit], maintained in the total order


def is_ranked(hits: list[ScoredHit]) -> bool:
    """True when `hits` respects the total order with no duplicate ids."""
    keys = [hit_sort_key(h) for h in hits]
    if any(b < a for a, b in zip(keys, keys[1:])):
        return False
    pairs = {(h.corpus_id, h.passage_id) for h in hits}
    return len(pairs) == len(hits)


def score_all(query_vec: np.ndarray, matrix: EmbeddingMatrix) -> list[tuple[str, float]]:
    """Exact dot product against every row, in row order."""
    query_vec = np.asarray(query_vec)
    if query_vec.shape != (matrix.dim,):
        raise DimensionMismatch(matrix.dim, query_vec.shape[-1] if query_vec.ndim else 0)
    scores = matrix.values.astype(np.float64) @ query_vec.astype(np.float64)
    return list(zip(matrix.ids, scores.tolist()))


def top_k(scored: list[tuple[str, float]], k: int, corpus_id: str) -> list[ScoredHit]:
    """First min(k, len) items under the total order."""
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return []
    best = heapq.nsmallest(k, scored, key=lambda item: (-item[1], item[0]))
    return [ScoredHit(corpus_id, pid, score) for pid, score in best]


def search_top_k(query_vec: np.ndarray, matrix: EmbeddingMatrix, k: int) -> list[ScoredHit]:
    return top_k(score_all(query_vec, matrix), k, matrix.corpus_id)


def rank_of(query_vec: np.ndarray, matrix: EmbeddingMatrix, passage_id: str) -> int:
    """1-based rank of `passage_id` in the full ranking of `matrix`.

    Computed by counting passages strictly ahead under the total order,
    which avoids materializing the sort.
    """
    scores = np.asarray([s for _, s in score_all(query_vec, matrix)])
    row = matrix.row_index(passage_id)
    target = scores[row]
    ahead = int(np.sum(scores > target))
    ties = np.flatnonzero(scores == target)
    ahead += sum(1 for t in ties if matrix.ids[t] < passage_id)
    return ahead + 1
