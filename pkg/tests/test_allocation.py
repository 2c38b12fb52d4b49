from __future__ import annotations

import numpy as np
import pytest

from mdretrieve.allocation import (
    NaiveMerge,
    PerQueryOracle,
    PerTask,
    apportion_budget,
    parse_strategy,
    retrieve_naive,
    retrieve_per_query_oracle,
    retrieve_per_task,
)
from mdretrieve.errors import InsufficientCandidates, MissingGold
from mdretrieve.metrics import recall_at_k
from mdretrieve.search import ScoredHit, hit_sort_key, search_top_k

from helpers import make_hits, random_matrix


BIG = {"A": 1000, "B": 1000}


def test_apportion_even_split():
    assert apportion_budget(10, {"A": 0.5, "B": 0.5}, BIG) == {"A": 5, "B": 5}


def test_apportion_paper_fraction():
    assert apportion_budget(10, {"A": 0.4, "B": 0.6}, BIG) == {"A": 4, "B": 6}


def test_apportion_remainder_tie_to_ascending_id():
    # quotas 2.5 / 7.5: floors 2,7, one leftover, remainders tie -> A
    assert apportion_budget(10, {"A": 0.25, "B": 0.75}, BIG) == {"A": 3, "B": 7}


def test_apportion_k_zero():
    assert apportion_budget(0, {"A": 0.5, "B": 0.5}, BIG) == {"A": 0, "B": 0}


def test_apportion_clamps_and_redistributes():
    split = apportion_budget(10, {"A": 0.5, "B": 0.5}, {"A": 3, "B": 100})
    assert split == {"A": 3, "B": 7}


def test_apportion_zero_fraction_fallback():
    # A saturates at 2; the leftover fraction mass is 0, so equal shares kick in
    split = apportion_budget(5, {"A": 1.0, "B": 0.0}, {"A": 2, "B": 100})
    assert split == {"A": 2, "B": 3}


def test_apportion_capacity_shortfall():
    split = apportion_budget(10, {"A": 0.5, "B": 0.5}, {"A": 2, "B": 3})
    assert split == {"A": 2, "B": 3}
    assert sum(split.values()) == 5  # < k only because capacity ran out


def test_apportion_monotone_in_k_two_corpora():
    sizes = {"A": 10_000, "B": 10_000}
    for f in [round(i / 10, 1) for i in range(11)]:
        prev = {"A": 0, "B": 0}
        for k in range(0, 120):
            split = apportion_budget(k, {"A": f, "B": 1.0 - f}, sizes)
            assert sum(split.values()) == k
            assert split["A"] >= prev["A"] and split["B"] >= prev["B"]
            prev = split


def test_per_task_fraction_validation():
    with pytest.raises(ValueError):
        PerTask({"A": -0.1, "B": 1.1})
    with pytest.raises(ValueError):
        PerTask({"A": 0.5, "B": 0.4})
    PerTask({"A": 0.5, "B": 0.5})


def test_retrieve_naive_hand_merge():
    lists = {
        "A": make_hits("A", [("a1", 9.0), ("a2", 7.0)]),
        "B": make_hits("B", [("b1", 8.0), ("b2", 1.0)]),
    }
    merged = retrieve_naive(lists, 3, {"A": 2, "B": 2})
    assert [h.score for h in merged] == [9.0, 8.0, 7.0]


def test_retrieve_naive_k_zero_and_empty_corpus():
    lists = {"A": make_hits("A", [("a1", 5.0)]), "B": []}
    assert retrieve_naive(lists, 0, {"A": 1, "B": 0}) == []
    merged = retrieve_naive(lists, 1, {"A": 1, "B": 0})
    assert [h.passage_id for h in merged] == ["a1"]


def test_retrieve_naive_insufficient_candidates():
    lists = {"A": make_hits("A", [("a1", 5.0)])}
    with pytest.raises(InsufficientCandidates):
        retrieve_naive(lists, 3, {"A": 10})
    # corpus genuinely exhausted: fine
    assert len(retrieve_naive(lists, 3, {"A": 1})) == 1


def test_retrieve_naive_rejects_unordered_input():
    bad = [ScoredHit("A", "a1", 1.0), ScoredHit("A", "a2", 5.0)]
    with pytest.raises(ValueError):
        retrieve_naive({"A": bad}, 1, {"A": 2})


def test_retrieve_naive_equals_concatenated_topk():
    rng = np.random.default_rng(13)
    for _ in range(50):
        a = random_matrix(rng, "A", int(rng.integers(1, 30)), 4)
        b = random_matrix(rng, "B", int(rng.integers(1, 30)), 4)
        q = rng.standard_normal(4).astype(np.float32)
        k = int(rng.integers(0, 12))
        lists = {"A": search_top_k(q, a, k), "B": search_top_k(q, b, k)}
        merged = retrieve_naive(lists, k, {"A": len(a), "B": len(b)})
        pool = search_top_k(q, a, len(a)) + search_top_k(q, b, len(b))
        oracle = sorted(pool, key=hit_sort_key)[:k]
        assert merged == oracle


def test_retrieve_per_task_hand_cases():
    lists = {
        "A": make_hits("A", [("a1", 9.0), ("a2", 7.0)]),
        "B": make_hits("B", [("b1", 8.0), ("b2", 1.0)]),
    }
    sizes = {"A": 2, "B": 2}
    out = retrieve_per_task(lists, {"A": 1, "B": 1}, sizes)
    assert [h.score for h in out] == [9.0, 8.0]
    out = retrieve_per_task(lists, {"A": 2, "B": 0}, sizes)
    assert [h.passage_id for h in out] == ["a1", "a2"]
    assert retrieve_per_task(lists, {"A": 0, "B": 0}, sizes) == []


def test_retrieve_per_task_budget_conservation():
    rng = np.random.default_rng(23)
    a = random_matrix(rng, "A", 40, 3)
    b = random_matrix(rng, "B", 40, 3)
    q = rng.standard_normal(3).astype(np.float32)
    sizes = {"A": 40, "B": 40}
    for k in (0, 1, 5, 10):
        split = apportion_budget(k, {"A": 0.3, "B": 0.7}, sizes)
        lists = {"A": search_top_k(q, a, max(split.values())),
                 "B": search_top_k(q, b, max(split.values()))}
        out = retrieve_per_task(lists, split, sizes)
        assert len(out) == sum(split.values()) == k


def test_oracle_forced_optimum():
    lists = {
        "A": make_hits("A", [("gold_a", 9.0), ("a2", 7.0)]),
        "B": make_hits("B", [("gold_b", 8.0), ("b2", 1.0)]),
    }
    gold = {"A": {"gold_a"}, "B": {"gold_b"}}
    ranked, split = retrieve_per_query_oracle(lists, 2, gold, {"A": 2, "B": 2})
    assert split == {"A": 1, "B": 1}
    assert recall_at_k(ranked, gold) == 1.0


def test_oracle_all_misses_tie_break_split():
    lists = {
        "A": make_hits("A", [(f"a{i}", 10.0 - i) for i in range(12)]),
        "B": make_hits("B", [(f"b{i}", 10.0 - i) for i in range(12)]),
    }
    gold = {"A": {"hidden_a"}, "B": {"hidden_b"}}
    sizes = {"A": 50, "B": 50}
    ranked, split = retrieve_per_query_oracle(lists, 10, gold, sizes)
    assert split == {"A": 5, "B": 5}
    _, split3 = retrieve_per_query_oracle(lists, 3, gold, sizes)
    assert split3 == {"A": 1, "B": 2}


def test_oracle_missing_gold():
    lists = {"A": make_hits("A", [("a1", 1.0)])}
    with pytest.raises(MissingGold):
        retrieve_per_query_oracle(lists, 1, {}, {"A": 1})


def test_oracle_three_corpora_compositions():
    lists = {
        "A": make_hits("A", [("ga", 3.0), ("a2", 2.0)]),
        "B": make_hits("B", [("gb", 1.0)]),
        "C": make_hits("C", [("gc", 0.5)]),
    }
    gold = {"A": {"ga"}, "B": {"gb"}, "C": {"gc"}}
    ranked, split = retrieve_per_query_oracle(lists, 3, gold,
                                              {"A": 2, "B": 1, "C": 1})
    assert split == {"A": 1, "B": 1, "C": 1}
    assert recall_at_k(ranked, gold) == 1.0


def dominance_instance(rng):
    da, db = int(rng.integers(1, 51)), int(rng.integers(1, 51))
    dim = int(rng.integers(1, 9))
    a = random_matrix(rng, "A", da, dim)
    b = random_matrix(rng, "B", db, dim)
    q = rng.standard_normal(dim).astype(np.float32)
    k = int(rng.integers(1, 11))
    gold = {"A": {a.ids[int(rng.integers(0, da))]},
            "B": {b.ids[int(rng.integers(0, db))]}}
    sizes = {"A": da, "B": db}
    lists = {"A": search_top_k(q, a, k), "B": search_top_k(q, b, k)}
    return lists, k, gold, sizes


def test_oracle_dominates_naive_and_per_task():
    rng = np.random.default_rng(99)
    grid = [round(i / 10, 1) for i in range(11)]
    for _ in range(100):
        lists, k, gold, sizes = dominance_instance(rng)
        oracle_ranked, _ = retrieve_per_query_oracle(lists, k, gold, sizes)
        r_oracle = recall_at_k(oracle_ranked, gold)
        r_naive = recall_at_k(retrieve_naive(lists, k, sizes), gold)
        assert r_oracle >= r_naive
        for f in grid:
            split = apportion_budget(k, {"A": f, "B": 1.0 - f}, sizes)
            r_pt = recall_at_k(retrieve_per_task(lists, split, sizes), gold)
            assert r_oracle >= r_pt


def test_parse_strategy_grammar():
    assert isinstance(parse_strategy("naive", ["A", "B"], "A"), NaiveMerge)
    assert isinstance(parse_strategy("oracle", ["A", "B"], "A"), PerQueryOracle)
    pt = parse_strategy("per-task:0.3", ["A", "B"], "A")
    assert isinstance(pt, PerTask)
    assert pt.fractions == {"A": 0.3, "B": 0.7}
    pt3 = parse_strategy("per-task:0.4", ["A", "B", "C"], "B")
    assert pt3.fractions == pytest.approx({"B": 0.4, "A": 0.3, "C": 0.3})
    for bad in ("per-task:1.5", "per-task:-0.1", "per-task:nan",
                "per-task:x", "bogus"):
        with pytest.raises(ValueError):
            parse_strategy(bad, ["A", "B"], "A")
