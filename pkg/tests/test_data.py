from __future__ import annotations

import json

import pytest

from mdretrieve.data import (
    BenchmarkManifest,
    Corpus,
    Passage,
    SyntheticConfig,
    build_entity_benchmark,
    generate_synthetic_benchmark,
    load_corpus,
    load_manifest,
    load_query_set,
    load_training_pairs,
    save_corpus,
    save_manifest,
    save_query_set,
    save_training_pairs,
    split_query_set,
)
from mdretrieve.errors import (
    DanglingReference,
    DuplicateMatch,
    DuplicatePassageId,
    InvalidConfig,
    MalformedRecord,
    MissingFile,
    UnknownMatchedId,
)
from mdretrieve.features import tokenize


def write_jsonl(path, records):
    path.write_text("\n".join(json.dumps(r) for r in records) + "\n",
                    encoding="utf-8")


def test_load_corpus_basic(tmp_path):
    path = tmp_path / "c.jsonl"
    write_jsonl(path, [{"id": "p1", "text": "a"}, {"id": "p2", "text": "b"}])
    corpus = load_corpus(path, "C")
    assert len(corpus) == 2
    assert [p.id for p in corpus.passages] == ["p1", "p2"]
    assert corpus.get("p2").text == "b"


def test_load_corpus_duplicate_id(tmp_path):
    path = tmp_path / "c.jsonl"
    write_jsonl(path, [{"id": "p1", "text": "a"}, {"id": "p1", "text": "b"}])
    with pytest.raises(DuplicatePassageId):
        load_corpus(path, "C")


def test_load_corpus_empty_file(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text("", encoding="utf-8")
    assert len(load_corpus(path, "C")) == 0


def test_load_corpus_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        load_corpus(tmp_path / "absent.jsonl", "C")


def test_load_corpus_malformed_reports_line(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"id": "p1", "text": "a"}\nnot json\n', encoding="utf-8")
    with pytest.raises(MalformedRecord) as err:
        load_corpus(path, "C")
    assert err.value.line_no == 2


def test_load_corpus_title_and_roundtrip(tmp_path):
    path = tmp_path / "c.jsonl"
    write_jsonl(path, [{"id": "p1", "text": "desc", "title": "Product X"}])
    corpus = load_corpus(path, "C")
    assert corpus.get("p1").title == "Product X"
    assert corpus.get("p1").query_text() == "Product X"
    out = tmp_path / "c2.jsonl"
    save_corpus(corpus, out)
    assert len(load_corpus(out, "C")) == 1
    assert load_corpus(out, "C").get("p1").title == "Product X"


def test_load_query_set_validates_references(tmp_path):
    corpora = [
        Corpus("A", [Passage("a1", "x")]),
        Corpus("B", [Passage("b7", "y")]),
    ]
    path = tmp_path / "q.jsonl"
    write_jsonl(path, [
        {"id": "q1", "text": "t", "relevant": {"A": ["a1"], "B": ["b7"]}},
    ])
    qs = load_query_set(path, corpora)
    assert len(qs) == 1
    assert not qs.queries[0].single_distribution

    write_jsonl(path, [{"id": "q1", "text": "t", "relevant": {"A": ["zzz"]}}])
    with pytest.raises(DanglingReference):
        load_query_set(path, corpora)

    write_jsonl(path, [{"id": "q1", "text": "t", "relevant": {"Z": ["a1"]}}])
    with pytest.raises(DanglingReference):
        load_query_set(path, corpora)


def test_load_query_set_single_corpus_flag(tmp_path):
    corpora = [Corpus("A", [Passage("a1", "x")])]
    path = tmp_path / "q.jsonl"
    write_jsonl(path, [{"id": "q1", "text": "t", "relevant": {"A": ["a1"]}}])
    qs = load_query_set(path, corpora)
    assert qs.queries[0].single_distribution


def test_query_set_roundtrip(tmp_path):
    corpora = [Corpus("A", [Passage("a1", "x"), Passage("a2", "y")])]
    path = tmp_path / "q.jsonl"
    write_jsonl(path, [
        {"id": "q1", "text": "t1", "relevant": {"A": ["a1", "a2"]}},
        {"id": "q2", "text": "t2", "relevant": {"A": ["a2"]}},
    ])
    qs = load_query_set(path, corpora)
    out = tmp_path / "q2.jsonl"
    save_query_set(qs, out)
    back = load_query_set(out, corpora)
    assert [q.id for q in back] == ["q1", "q2"]
    assert back.queries[0].relevant == {"A": frozenset({"a1", "a2"})}


def test_training_pairs_roundtrip(tmp_path):
    from mdretrieve.data import TrainingPair
    pairs = [TrainingPair("query text", "p1", "A")]
    path = tmp_path / "t.jsonl"
    save_training_pairs(pairs, path)
    assert load_training_pairs(path) == pairs


def entity_fixture():
    corpus_a = Corpus("A", [
        Passage(f"a{i}", f"description a{i}", title=f"title a{i}") for i in range(6)
    ])
    corpus_b = Corpus("B", [
        Passage(f"b{i}", f"description b{i}", title=f"title b{i}") for i in range(5)
    ])
    matches = [("a0", "b0"), ("a1", "b1"), ("a2", "b2"), ("a3", "b3")]
    return corpus_a, corpus_b, matches


def test_entity_benchmark_counts_and_split():
    corpus_a, corpus_b, matches = entity_fixture()
    bench = build_entity_benchmark(corpus_a, corpus_b, matches, split_seed=5)
    assert len(bench.val) == 4 and len(bench.test) == 4  # 2 queries per pair
    all_ids = {q.id for q in bench.val} | {q.id for q in bench.test}
    assert len(all_ids) == 2 * len(matches)
    assert {q.id for q in bench.val} & {q.id for q in bench.test} == set()
    # unmatched items become training pairs, query text = title
    assert [(p.query_text, p.positive_passage_id) for p in bench.train_a] == [
        ("title a4", "a4"), ("title a5", "a5")
    ]
    assert [p.positive_passage_id for p in bench.train_b] == ["b4"]


def test_entity_benchmark_queries_require_both_corpora():
    corpus_a, corpus_b, matches = entity_fixture()
    bench = build_entity_benchmark(corpus_a, corpus_b, matches, split_seed=5)
    for q in list(bench.val) + list(bench.test):
        assert set(q.relevant) == {"A", "B"}
        assert q.gold_count() == 2


def test_entity_benchmark_deterministic(tmp_path):
    corpus_a, corpus_b, matches = entity_fixture()
    blobs = []
    for run in range(2):
        bench = build_entity_benchmark(corpus_a, corpus_b, matches, split_seed=9)
        val, test = tmp_path / f"v{run}.jsonl", tmp_path / f"t{run}.jsonl"
        save_query_set(bench.val, val)
        save_query_set(bench.test, test)
        blobs.append(val.read_bytes() + test.read_bytes())
    assert blobs[0] == blobs[1]
    b1 = build_entity_benchmark(corpus_a, corpus_b, matches, split_seed=9)
    b3 = build_entity_benchmark(corpus_a, corpus_b, matches, split_seed=10)
    assert [q.id for q in b1.val] != [q.id for q in b3.val]


def test_entity_benchmark_no_matches():
    corpus_a, corpus_b, _ = entity_fixture()
    bench = build_entity_benchmark(corpus_a, corpus_b, [], split_seed=0)
    assert len(bench.val) == 0 and len(bench.test) == 0
    assert len(bench.train_a) == len(corpus_a)
    assert len(bench.train_b) == len(corpus_b)


def test_entity_benchmark_odd_split_differs_by_one():
    corpus_a, corpus_b, matches = entity_fixture()
    bench = build_entity_benchmark(corpus_a, corpus_b, matches[:3], split_seed=0)
    n_val, n_test = len(bench.val) // 2, len(bench.test) // 2
    assert n_val + n_test == 3
    assert abs(n_val - n_test) == 1


def test_entity_benchmark_sides_flag():
    corpus_a, corpus_b, matches = entity_fixture()
    bench = build_entity_benchmark(corpus_a, corpus_b, matches, split_seed=5,
                                   sides="a")
    assert len(bench.val) + len(bench.test) == len(matches)
    assert all(q.id.endswith(".a") for q in list(bench.val) + list(bench.test))


def test_entity_benchmark_bad_matches():
    corpus_a, corpus_b, matches = entity_fixture()
    with pytest.raises(UnknownMatchedId):
        build_entity_benchmark(corpus_a, corpus_b, [("zz", "b0")], split_seed=0)
    with pytest.raises(DuplicateMatch):
        build_entity_benchmark(corpus_a, corpus_b,
                               [("a0", "b0"), ("a0", "b1")], split_seed=0)


def test_synthetic_benchmark_structure():
    config = SyntheticConfig(seed=1, n_pairs=10, n_distractors_per_query=3)
    bench = generate_synthetic_benchmark(config)
    assert len(bench.queries) == 10
    assert len(bench.corpus_a) == 10 * (1 + 3)
    assert len(bench.corpus_b) == 10
    assert len(bench.train_a) == 10
    assert all(p.corpus_id == "A" for p in bench.train_a)


def test_synthetic_benchmark_zero_distractors():
    bench = generate_synthetic_benchmark(SyntheticConfig(seed=1, n_pairs=7,
                                                         n_distractors_per_query=0))
    assert len(bench.corpus_a) == 7
    assert len(bench.corpus_b) == 7


def test_synthetic_benchmark_byte_deterministic(tmp_path):
    blobs = []
    for _ in range(2):
        bench = generate_synthetic_benchmark(SyntheticConfig(seed=77, n_pairs=12))
        a, b, q = tmp_path / "a.jsonl", tmp_path / "b.jsonl", tmp_path / "q.jsonl"
        save_corpus(bench.corpus_a, a)
        save_corpus(bench.corpus_b, b)
        save_query_set(bench.queries, q)
        blobs.append(a.read_bytes() + b.read_bytes() + q.read_bytes())
    assert blobs[0] == blobs[1]


def test_synthetic_gold_is_unique_passage_with_all_entity_tokens():
    bench = generate_synthetic_benchmark(SyntheticConfig(seed=3, n_pairs=15))
    for query in bench.queries:
        entity_tokens = set(tokenize(query.text))
        for corpus, cid in ((bench.corpus_a, "A"), (bench.corpus_b, "B")):
            holders = [p.id for p in corpus.passages
                       if entity_tokens <= set(tokenize(p.text))]
            assert holders == sorted(query.relevant[cid])


def test_synthetic_invalid_config():
    with pytest.raises(InvalidConfig):
        generate_synthetic_benchmark(SyntheticConfig(seed=0, n_pairs=0))
    with pytest.raises(InvalidConfig):
        generate_synthetic_benchmark(
            SyntheticConfig(seed=0, n_pairs=1, n_distractors_per_query=-1))
    with pytest.raises(InvalidConfig):
        generate_synthetic_benchmark(
            SyntheticConfig(seed=0, n_pairs=1, style_a_vocab=0))


def test_split_query_set_partitions():
    bench = generate_synthetic_benchmark(SyntheticConfig(seed=2, n_pairs=9))
    val, test = split_query_set(bench.queries, seed=4)
    assert len(val) + len(test) == 9
    assert abs(len(val) - len(test)) <= 1
    assert {q.id for q in val} & {q.id for q in test} == set()
    val2, test2 = split_query_set(bench.queries, seed=4)
    assert [q.id for q in val] == [q.id for q in val2]


def test_manifest_roundtrip_and_validation(tmp_path):
    for name in ("a.jsonl", "b.jsonl", "qv.jsonl", "qt.jsonl", "tr.jsonl"):
        (tmp_path / name).write_text("", encoding="utf-8")
    manifest = BenchmarkManifest(
        corpora=[("A", tmp_path / "a.jsonl"), ("B", tmp_path / "b.jsonl")],
        queries_val=tmp_path / "qv.jsonl",
        queries_test=tmp_path / "qt.jsonl",
        training_pairs=tmp_path / "tr.jsonl",
        known_corpus_id="A",
    )
    path = tmp_path / "manifest.json"
    save_manifest(manifest, path)
    back = load_manifest(path)
    assert back.known_corpus_id == "A"
    assert [cid for cid, _ in back.corpora] == ["A", "B"]
    assert back.queries_val == tmp_path / "qv.jsonl"

    with pytest.raises(InvalidConfig):
        BenchmarkManifest(corpora=[("A", tmp_path / "a.jsonl")],
                          queries_val=tmp_path / "qv.jsonl",
                          queries_test=tmp_path / "qt.jsonl",
                          training_pairs=tmp_path / "tr.jsonl",
                          known_corpus_id="NOPE")
    with pytest.raises(InvalidConfig):
        BenchmarkManifest(corpora=[("A", tmp_path / "a.jsonl")],
                          queries_val=tmp_path / "a.jsonl",
                          queries_test=tmp_path / "qt.jsonl",
                          training_pairs=tmp_path / "tr.jsonl",
                          known_corpus_id="A")
