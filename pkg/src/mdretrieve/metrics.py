"""Recall@k and average precision over ranked hit lists.

With the standard two-gold queries (one relevant passage per corpus),
recall takes values in {0, 0.5, 1}. AP follows
(1/N) * sum_k Precision@k * rel(k) over the retrieved list; anything not
retrieved contributes zero.
"""

from __future__ import annotations

from collections.abc import Mapping, Set

from .errors import EmptyGold
from .search import ScoredHit

GoldMap = Mapping[str, Set[str]]  # corpus_id -> relevant passage ids


def gold_size(gold: GoldMap) -> int:
    return sum(len(pids) for pids in gold.values())


def _is_relevant(hit: ScoredHit, gold: GoldMap) -> bool:
    return hit.passage_id in gold.get(hit.corpus_id, ())


def recall_at_k(ranked: list[ScoredHit], gold: GoldMap) -> float:
    n = gold_size(gold)
    if n == 0:
        raise EmptyGold("recall needs a non-empty gold set")
    retrieved = sum(1 for hit in ranked if _is_relevant(hit, gold))
    return retrieved / n


def average_precision(ranked: list[ScoredHit], gold: GoldMap) -> float:
    n = gold_size(gold)
    if n == 0:
        raise EmptyGold("average precision needs a non-empty gold set")
    hits = 0
    acc = 0.0
    for rank, hit in enumerate(ranked, start=1):
        if _is_relevant(hit, gold):
            hits += 1
            acc += hits / rank
    return acc / n
