"""Corpus / query / training-pair data model, JSONL ingestion, and benchmark builders.

File formats (one JSON object per line, UTF-8, LF):
    corpus:         {"id": str, "text": str, "title": str?}
    queries:        {"id": str, "text": str, "relevant": {corpus_id: [passage_id, ...]}}
    training pairs: {"query_text": str, "positive_id": str, "corpus_id": str}
    matches:        {"id_a": str, "id_b": str}

The benchmark manifest is a single JSON document:
    {"corpora": [{"id": str, "path": str}, ...],
     "queries_val": str, "queries_test": str,
     "training_pairs": str, "known_corpus_id": str}
with paths interpreted relative to the manifest's directory.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .errors import (
    DanglingReference,
    DuplicateMatch,
    DuplicatePassageId,
    InvalidConfig,
    MalformedRecord,
    MissingFile,
    UnknownMatchedId,
)
from .rng import SplitMix64


@dataclass(frozen=True)
class Passage:
    id: str
    text: str
    title: str | None = None

    def query_text(self) -> str:
        """Title when present, else the passage text itself."""
        return self.title if self.title is not None else self.text


@dataclass
class Corpus:
    corpus_id: str
    passages: list[Passage]

    def __post_init__(self):
        if not self.corpus_id:
            raise ValueError("corpus_id must be non-empty")
        index: dict[str, int] = {}
        for i, p in enumerate(self.passages):
            if not p.id:
                raise ValueError("passage id must be non-empty")
            if p.id in index:
                raise DuplicatePassageId(p.id)
            index[p.id] = i
        self._index = index

    def __len__(self) -> int:
        return len(self.passages)

    def __contains__(self, passage_id: str) -> bool:
        return passage_id in self._index

    def get(self, passage_id: str) -> Passage:
        return self.passages[self._index[passage_id]]

    def index_of(self, passage_id: str) -> int:
        return self._index[passage_id]


@dataclass(frozen=True)
class Query:
    id: str
    text: str
    relevant: dict[str, frozenset[str]]

    @property
    def single_distribution(self) -> bool:
        """True for training-style queries touching one corpus only."""
        return len(self.relevant) == 1

    def gold_count(self) -> int:
        return sum(len(v) for v in self.relevant.values())


@dataclass
class QuerySet:
    queries: list[Query]

    def __len__(self) -> int:
        return len(self.queries)

    def __iter__(self):
        return iter(self.queries)


@dataclass(frozen=True)
class TrainingPair:
    query_text: str
    positive_passage_id: str
    corpus_id: str


@dataclass
class BenchmarkManifest:
    corpora: list[tuple[str, Path]]  # (corpus_id, path)
    queries_val: Path
    queries_test: Path
    training_pairs: Path
    known_corpus_id: str

    def __post_init__(self):
        ids = [cid for cid, _ in self.corpora]
        if self.known_corpus_id not in ids:
            raise InvalidConfig(
                f"known_corpus_id {self.known_corpus_id!r} is not among corpora {ids}"
            )
        paths = [str(p) for _, p in self.corpora] + [
            str(self.queries_val), str(self.queries_test), str(self.training_pairs)
        ]
        if len(set(paths)) != len(paths):
            raise InvalidConfig("manifest paths must be distinct")


def _iter_jsonl(path: Path):
    """Yield (line_no, record) for each non-blank line; raise on bad JSON."""
    if not path.is_file():
        raise MissingFile(path)
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedRecord(path, line_no, f"invalid JSON: {exc.msg}") from exc
            if not isinstance(record, dict):
                raise MalformedRecord(path, line_no, "record is not a JSON object")
            yield line_no, record


def _require_str(record: dict, key: str, path: Path, line_no: int) -> str:
    value = record.get(key)
    if not isinstance(value, str):
        raise MalformedRecord(path, line_no, f"missing or non-string {key!r}")
    return value


def load_corpus(path: str | Path, corpus_id: str) -> Corpus:
    """Load a JSONL corpus; passages keep file order."""
    path = Path(path)
    passages = []
    seen: set[str] = set()
    for line_no, record in _iter_jsonl(path):
        pid = _require_str(record, "id", path, line_no)
        text = _require_str(record, "text", path, line_no)
        if not pid:
            raise MalformedRecord(path, line_no, "empty id")
        if pid in seen:
            raise DuplicatePassageId(pid)
        seen.add(pid)
        title = record.get("title")
        if title is not None and not isinstance(title, str):
            raise MalformedRecord(path, line_no, "non-string 'title'")
        passages.append(Passage(id=pid, text=text, title=title))
    return Corpus(corpus_id=corpus_id, passages=passages)


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    lines = []
    for p in corpus.passages:
        record = {"id": p.id, "text": p.text}
        if p.title is not None:
            record["title"] = p.title
        lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_query_set(path: str | Path, corpora: list[Corpus]) -> QuerySet:
    """Load queries and validate every relevance reference against `corpora`."""
    path = Path(path)
    by_id = {c.corpus_id: c for c in corpora}
    queries = []
    seen: set[str] = set()
    for line_no, record in _iter_jsonl(path):
        qid = _require_str(record, "id", path, line_no)
        text = _require_str(record, "text", path, line_no)
        if qid in seen:
            raise MalformedRecord(path, line_no, f"duplicate query id {qid!r}")
        seen.add(qid)
        raw_rel = record.get("relevant")
        if not isinstance(raw_rel, dict):
            raise MalformedRecord(path, line_no, "missing or non-object 'relevant'")
        relevant: dict[str, frozenset[str]] = {}
        for cid, pids in raw_rel.items():
            if not isinstance(pids, list) or not all(isinstance(p, str) for p in pids):
                raise MalformedRecord(path, line_no, f"'relevant'[{cid!r}] is not a list of ids")
            corpus = by_id.get(cid)
            if corpus is None:
                raise DanglingReference(qid, cid, pids[0] if pids else "")
            for pid in pids:
                if pid not in corpus:
                    raise DanglingReference(qid, cid, pid)
            relevant[cid] = frozenset(pids)
        queries.append(Query(id=qid, text=text, relevant=relevant))
    return QuerySet(queries=queries)


def save_query_set(queries: QuerySet, path: str | Path) -> None:
    lines = []
    for q in queries:
        record = {
            "id": q.id,
            "text": q.text,
            "relevant": {cid: sorted(pids) for cid, pids in sorted(q.relevant.items())},
        }
        lines.append(json.dumps(record, ensure_ascii=False, sort_keys=True))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_training_pairs(path: str | Path) -> list[TrainingPair]:
    path = Path(path)
    pairs = []
    for line_no, record in _iter_jsonl(path):
        pairs.append(TrainingPair(
            query_text=_require_str(record, "query_text", path, line_no),
            positive_passage_id=_require_str(record, "positive_id", path, line_no),
            corpus_id=_require_str(record, "corpus_id", path, line_no),
        ))
    return pairs


def save_training_pairs(pairs: list[TrainingPair], path: str | Path) -> None:
    lines = [
        json.dumps(
            {"query_text": p.query_text, "positive_id": p.positive_passage_id,
             "corpus_id": p.corpus_id},
            ensure_ascii=False, sort_keys=True,
        )
        for p in pairs
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_matches(path: str | Path) -> list[tuple[str, str]]:
    path = Path(path)
    matches = []
    for line_no, record in _iter_jsonl(path):
        matches.append((
            _require_str(record, "id_a", path, line_no),
            _require_str(record, "id_b", path, line_no),
        ))
    return matches


def load_manifest(path: str | Path) -> BenchmarkManifest:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedRecord(path, 1, f"invalid JSON: {exc.msg}") from exc
    base = path.parent
    try:
        corpora = [(c["id"], base / c["path"]) for c in doc["corpora"]]
        return BenchmarkManifest(
            corpora=corpora,
            queries_val=base / doc["queries_val"],
            queries_test=base / doc["queries_test"],
            training_pairs=base / doc["training_pairs"],
            known_corpus_id=doc["known_corpus_id"],
        )
    except (KeyError, TypeError) as exc:
        raise MalformedRecord(path, 1, f"bad manifest structure: {exc}") from exc


def save_manifest(manifest: BenchmarkManifest, path: str | Path) -> None:
    """Write the manifest with paths relative to its own directory."""
    path = Path(path)
    base = path.parent

    def rel(p: Path) -> str:
        try:
            return str(Path(p).relative_to(base))
        except ValueError:
            return str(p)

    doc = {
        "corpora": [{"id": cid, "path": rel(p)} for cid, p in manifest.corpora],
        "queries_val": rel(manifest.queries_val),
        "queries_test": rel(manifest.queries_test),
        "training_pairs": rel(manifest.training_pairs),
        "known_corpus_id": manifest.known_corpus_id,
    }
    path.write_text(json.dumps(doc, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
                    encoding="utf-8")


# --- benchmark construction -------------------------------------------------


@dataclass
class EntityBenchmark:
    val: QuerySet
    test: QuerySet
    train_a: list[TrainingPair]
    train_b: list[TrainingPair]


def split_pairs_val_test(n: int, seed: int) -> tuple[list[int], list[int]]:
    """Seeded Fisher-Yates over range(n); first half val (floor on odd n)."""
    order = list(range(n))
    SplitMix64(seed).shuffle(order)
    n_val = n // 2
    return order[:n_val], order[n_val:]


def build_entity_benchmark(
    corpus_a: Corpus,
    corpus_b: Corpus,
    matches: list[tuple[str, str]],
    split_seed: int,
    sides: str = "both",
) -> EntityBenchmark:
    """Turn matched-pair entity data into a two-corpus retrieval benchmark.

    Each matched pair yields one query per side (the side's title as query
    text) requiring the pair's passage from both corpora; pairs are split
    1:1 into val/test by a seeded shuffle. Unmatched items become
    training pairs (title as query, own passage as positive).

    `sides` is "both", "a", or "b" to restrict which side's titles
    become queries.
    """
    if sides not in ("both", "a", "b"):
        raise InvalidConfig(f"sides must be 'both', 'a' or 'b', got {sides!r}")
    seen_a: set[str] = set()
    seen_b: set[str] = set()
    for id_a, id_b in matches:
        if id_a not in corpus_a:
            raise UnknownMatchedId(corpus_a.corpus_id, id_a)
        if id_b not in corpus_b:
            raise UnknownMatchedId(corpus_b.corpus_id, id_b)
        if id_a in seen_a:
            raise DuplicateMatch(id_a)
        if id_b in seen_b:
            raise DuplicateMatch(id_b)
        seen_a.add(id_a)
        seen_b.add(id_b)

    def queries_for(pair_indices: list[int]) -> QuerySet:
        out = []
        for idx in sorted(pair_indices):
            id_a, id_b = matches[idx]
            relevant = {
                corpus_a.corpus_id: frozenset([id_a]),
                corpus_b.corpus_id: frozenset([id_b]),
            }
            if sides in ("both", "a"):
                out.append(Query(id=f"pair{idx:06d}.a",
                                 text=corpus_a.get(id_a).query_text(),
                                 relevant=relevant))
            if sides in ("both", "b"):
                out.append(Query(id=f"pair{idx:06d}.b",
                                 text=corpus_b.get(id_b).query_text(),
                                 relevant=relevant))
        return QuerySet(out)

    val_idx, test_idx = split_pairs_val_test(len(matches), split_seed)

    train_a = [
        TrainingPair(p.query_text(), p.id, corpus_a.corpus_id)
        for p in corpus_a.passages if p.id not in seen_a
    ]
    train_b = [
        TrainingPair(p.query_text(), p.id, corpus_b.corpus_id)
        for p in corpus_b.passages if p.id not in seen_b
    ]
    return EntityBenchmark(
        val=queries_for(val_idx),
        test=queries_for(test_idx),
        train_a=train_a,
        train_b=train_b,
    )


@dataclass(frozen=True)
class SyntheticConfig:
    """Knobs for the synthetic two-distribution benchmark.

    Each of n_pairs items gets unique entity tokens; the known corpus (A)
    holds the gold passage (entities + style-A filler) plus near-duplicate
    distractors sharing half the entity tokens, the novel corpus (B) holds
    the gold passage written with a disjoint style-B filler vocabulary.
    """
    seed: int
    n_pairs: int
    n_distractors_per_query: int = 5
    style_a_vocab: int = 40
    style_b_vocab: int = 40
    n_entity_tokens: int = 4
    n_filler_tokens: int = 40
    corpus_id_a: str = "A"
    corpus_id_b: str = "B"


@dataclass
class SyntheticBenchmark:
    corpus_a: Corpus
    corpus_b: Corpus
    queries: QuerySet
    train_a: list[TrainingPair]


def generate_synthetic_benchmark(config: SyntheticConfig) -> SyntheticBenchmark:
    """Deterministic synthetic benchmark; see SyntheticConfig."""
    if config.n_pairs < 1:
        raise InvalidConfig("n_pairs must be >= 1")
    if config.n_distractors_per_query < 0:
        raise InvalidConfig("n_distractors_per_query must be >= 0")
    if config.style_a_vocab < 1 or config.style_b_vocab < 1:
        raise InvalidConfig("style vocab sizes must be >= 1")
    if config.n_entity_tokens < 1:
        raise InvalidConfig("n_entity_tokens must be >= 1")
    if config.n_filler_tokens < 0:
        raise InvalidConfig("n_filler_tokens must be >= 0")
    if config.corpus_id_a == config.corpus_id_b:
        raise InvalidConfig("corpus ids must differ")

    rng = SplitMix64(config.seed)
    vocab_a = [f"stylea{v:03d}" for v in range(config.style_a_vocab)]
    vocab_b = [f"styleb{v:03d}" for v in range(config.style_b_vocab)]

    def fillers(vocab: list[str]) -> list[str]:
        return [vocab[rng.randint_below(len(vocab))] for _ in range(config.n_filler_tokens)]

    passages_a: list[Passage] = []
    passages_b: list[Passage] = []
    queries: list[Query] = []
    train_a: list[TrainingPair] = []

    for qi in range(config.n_pairs):
        entities = [f"item{qi:04d}tok{j}" for j in range(config.n_entity_tokens)]
        gold_a_id = f"a{qi:04d}"
        passages_a.append(Passage(gold_a_id, " ".join(entities + fillers(vocab_a))))
        half = entities[: config.n_entity_tokens // 2]
        for dj in range(config.n_distractors_per_query):
            passages_a.append(Passage(f"a{qi:04d}d{dj}", " ".join(half + fillers(vocab_a))))
        gold_b_id = f"b{qi:04d}"
        passages_b.append(Passage(gold_b_id, " ".join(entities + fillers(vocab_b))))

        query_text = " ".join(entities)
        queries.append(Query(
            id=f"q{qi:04d}",
            text=query_text,
            relevant={
                config.corpus_id_a: frozenset([gold_a_id]),
                config.corpus_id_b: frozenset([gold_b_id]),
            },
        ))
        train_a.append(TrainingPair(query_text, gold_a_id, config.corpus_id_a))

    return SyntheticBenchmark(
        corpus_a=Corpus(config.corpus_id_a, passages_a),
        corpus_b=Corpus(config.corpus_id_b, passages_b),
        queries=QuerySet(queries),
        train_a=train_a,
    )


def split_query_set(queries: QuerySet, seed: int) -> tuple[QuerySet, QuerySet]:
    """Split a query set 1:1 (val, test) with the benchmark split rule."""
    val_idx, test_idx = split_pairs_val_test(len(queries), seed)
    qs = queries.queries
    return (QuerySet([qs[i] for i in sorted(val_idx)]),
            QuerySet([qs[i] for i in sorted(test_idx)]))
