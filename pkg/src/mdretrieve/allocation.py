"""Budget allocation across corpora: naive merging, fixed per-task splits,
and the per-query oracle upper bound.

All three consume per-corpus ranked candidate lists (exact top prefixes
under the search total order) plus the true corpus sizes, so that a list
shorter than both the requirement and its corpus is detectable.
"""

from __future__ import annotations

import heapq
import math
from collections.abc import Iterator, Mapping
from dataclasses import dataclass, field

from .errors import InsufficientCandidates, MissingGold
from .metrics import GoldMap, average_precision, gold_size, recall_at_k
from .search import ScoredHit, hit_sort_key, is_ranked

BudgetSplit = dict  # corpus_id -> non-negative int

FRACTION_SUM_TOL = 1e-9


@dataclass(frozen=True)
class NaiveMerge:
    label = "naive"


@dataclass(frozen=True)
class PerTask:
    fractions: Mapping[str, float] = field(hash=False)

    def __post_init__(self):
        if any(f < 0 for f in self.fractions.values()):
            raise ValueError("per-task fractions must be non-negative")
        total = sum(self.fractions.values())
        if abs(total - 1.0) > FRACTION_SUM_TOL:
            raise ValueError(f"per-task fractions must sum to 1, got {total}")

    @property
    def label(self) -> str:
        inner = ",".join(f"{c}={f:g}" for c, f in sorted(self.fractions.items()))
        return f"per-task({inner})"


@dataclass(frozen=True)
class PerQueryOracle:
    label = "oracle"


Strategy = NaiveMerge | PerTask | PerQueryOracle


def parse_strategy(
    text: str, corpus_ids: list[str], known_corpus_id: str
) -> Strategy:
    """Parse the CLI grammar: "naive" | "per-task:<f>" | "oracle".

    The per-task fraction applies to the known corpus; the remainder is
    spread equally over the other corpora.
    """
    if text == "naive":
        return NaiveMerge()
    if text == "oracle":
        return PerQueryOracle()
    if text.startswith("per-task:"):
        raw = text[len("per-task:"):]
        try:
            f = float(raw)
        except ValueError:
            raise ValueError(f"invalid per-task fraction: {raw!r}") from None
        if not 0.0 <= f <= 1.0 or math.isnan(f):
            raise ValueError(f"per-task fraction must be in [0, 1], got {raw}")
        others = [c for c in corpus_ids if c != known_corpus_id]
        if known_corpus_id not in corpus_ids or not others:
            raise ValueError("per-task needs the known corpus plus at least one other")
        fractions = {known_corpus_id: f}
        for c in others:
            fractions[c] = (1.0 - f) / len(others)
        return PerTask(fractions)
    raise ValueError(f"unknown strategy {text!r} (want naive | per-task:<f> | oracle)")


def _largest_remainder(k: int, fractions: Mapping[str, float]) -> dict[str, int]:
    """Apportion k proportionally; leftovers go to the largest remainders,
    remainder ties broken by ascending corpus id."""
    cids = sorted(fractions)
    quotas = {c: k * fractions[c] for c in cids}
    alloc = {c: int(math.floor(quotas[c])) for c in cids}
    leftover = k - sum(alloc.values())
    order = sorted(cids, key=lambda c: (-(quotas[c] - alloc[c]), c))
    i = 0
    while leftover > 0:
        alloc[order[i % len(order)]] += 1
        leftover -= 1
        i += 1
    return alloc


def apportion_budget(
    k: int,
    fractions: Mapping[str, float],
    corpus_sizes: Mapping[str, int],
) -> BudgetSplit:
    """Largest-remainder apportionment of k over `fractions`, clamped to
    corpus sizes; clamp excess is re-apportioned over non-saturated corpora
    (by renormalized fractions, or equal shares if those are all zero)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    PerTask(fractions)  # reuse the invariant checks
    split = {c: 0 for c in fractions}
    todo = k
    active = set(fractions)
    while todo > 0 and active:
        total = sum(fractions[c] for c in active)
        if total > 0:
            residual = {c: fractions[c] / total for c in active}
        else:
            residual = {c: 1.0 / len(active) for c in active}
        alloc = _largest_remainder(todo, residual)
        for c in sorted(active):
            take = min(alloc[c], corpus_sizes[c] - split[c])
            split[c] += take
            todo -= take
        active = {c for c in active if split[c] < corpus_sizes[c]}
    return split


def _check_candidates(
    lists: Mapping[str, list[ScoredHit]],
    needed: Mapping[str, int],
    corpus_sizes: Mapping[str, int],
) -> None:
    for cid, hits in lists.items():
        need = min(needed.get(cid, 0), corpus_sizes[cid])
        if len(hits) < need:
            raise InsufficientCandidates(cid, len(hits), need)
        if not is_ranked(hits):
            raise ValueError(f"candidate list for {cid!r} is not in ranking order")


def retrieve_naive(
    per_corpus_lists: Mapping[str, list[ScoredHit]],
    k: int,
    corpus_sizes: Mapping[str, int],
) -> list[ScoredHit]:
    """Global top-k over the union of corpora (single merged ranking)."""
    _check_candidates(per_corpus_lists, {c: k for c in per_corpus_lists}, corpus_sizes)
    pool: list[ScoredHit] = []
    for cid in sorted(per_corpus_lists):
        pool.extend(per_corpus_lists[cid][:k])
    return heapq.nsmallest(k, pool, key=hit_sort_key)


def retrieve_per_task(
    per_corpus_lists: Mapping[str, list[ScoredHit]],
    split: BudgetSplit,
    corpus_sizes: Mapping[str, int],
) -> list[ScoredHit]:
    """Fixed quota from each corpus, merged into one score-ordered list."""
    _check_candidates(per_corpus_lists, split, corpus_sizes)
    pool: list[ScoredHit] = []
    for cid in sorted(split):
        pool.extend(per_corpus_lists[cid][: split[cid]])
    return sorted(pool, key=hit_sort_key)


def _compositions(k: int, n: int) -> Iterator[tuple[int, ...]]:
    if n == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, n - 1):
            yield (first,) + rest


def retrieve_per_query_oracle(
    per_corpus_lists: Mapping[str, list[ScoredHit]],
    k: int,
    gold: GoldMap,
    corpus_sizes: Mapping[str, int],
    query_id: str = "",
) -> tuple[list[ScoredHit], BudgetSplit]:
    """Gold-informed best split for one query (an upper bound, not a method).

    Enumerates every composition of k over the corpora (k+1 splits in the
    two-corpus case) and keeps the one maximizing recall; ties go to higher
    AP of the merged list, then the split closest to even, then the
    lexicographically smallest.
    """
    if gold_size(gold) == 0:
        raise MissingGold(query_id, "oracle allocation needs gold labels")
    _check_candidates(per_corpus_lists, {c: k for c in per_corpus_lists}, corpus_sizes)
    cids = sorted(per_corpus_lists)
    even = k / len(cids)
    best_key = None
    best: tuple[list[ScoredHit], BudgetSplit] | None = None
    for comp in _compositions(k, len(cids)):
        pool: list[ScoredHit] = []
        for cid, quota in zip(cids, comp):
            pool.extend(per_corpus_lists[cid][:quota])
        merged = sorted(pool, key=hit_sort_key)
        recall = recall_at_k(merged, gold)
        ap = average_precision(merged, gold)
        distance = sum(abs(c - even) for c in comp)
        key = (recall, ap, -distance, tuple(-c for c in comp))
        if best_key is None or key > best_key:
            best_key = key
            best = (merged, dict(zip(cids, comp)))
    assert best is not None  # k >= 0 always yields at least one composition
    return best
