"""Run-level evaluation (Recall@k / AP aggregation) and gold-rank diagnostics."""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .allocation import (
    NaiveMerge,
    PerQueryOracle,
    PerTask,
    Strategy,
    apportion_budget,
    retrieve_naive,
    retrieve_per_query_oracle,
    retrieve_per_task,
)
from .data import Query, QuerySet
from .encoder import EmbeddingMatrix, LinearEncoder, encode
from .errors import MissingGold
from .metrics import average_precision, recall_at_k
from .search import rank_of, search_top_k
from .storage import write_atomic


@dataclass(frozen=True)
class PerQueryResult:
    query_id: str
    recall: float
    ap: float
    split: dict  # corpus_id -> count actually drawn / allocated


@dataclass
class EvalReport:
    k: int
    strategy: str  # strategy label
    mean_recall: float
    mean_ap: float
    per_query: list[PerQueryResult]

    @property
    def n_queries(self) -> int:
        return len(self.per_query)


@dataclass(frozen=True)
class RankRecord:
    query_id: str
    passage_id: str
    rank: int  # 1-based position of the gold in the full corpus ranking
    normalized_rank: float  # rank / corpus size, in (0, 1]


@dataclass
class RankDiagnostics:
    per_corpus: dict[str, list[RankRecord]]


def _query_vector(
    query: Query,
    encoder: LinearEncoder | None,
    query_vectors: Mapping[str, np.ndarray] | None,
    max_query_tokens: int | None,
) -> np.ndarray:
    if query_vectors is not None:
        return np.asarray(query_vectors[query.id], dtype=np.float32)
    if encoder is None:
        raise ValueError("need either an encoder or precomputed query vectors")
    return encode(encoder, query.text, max_tokens=max_query_tokens)


def _evaluate_query(
    query: Query,
    embeddings: Mapping[str, EmbeddingMatrix],
    encoder: LinearEncoder | None,
    strategy: Strategy,
    k: int,
    query_vectors: Mapping[str, np.ndarray] | None,
    max_query_tokens: int | None,
) -> PerQueryResult:
    qvec = _query_vector(query, encoder, query_vectors, max_query_tokens)
    sizes = {cid: len(m) for cid, m in embeddings.items()}
    lists = {cid: search_top_k(qvec, m, k) for cid, m in embeddings.items()}

    if isinstance(strategy, NaiveMerge):
        ranked = retrieve_naive(lists, k, sizes)
        split: dict[str, int] = {cid: 0 for cid in sorted(sizes)}
        for hit in ranked:
            split[hit.corpus_id] += 1
    elif isinstance(strategy, PerTask):
        split = apportion_budget(k, strategy.fractions, sizes)
        ranked = retrieve_per_task(lists, split, sizes)
    elif isinstance(strategy, PerQueryOracle):
        ranked, split = retrieve_per_query_oracle(lists, k, query.relevant, sizes,
                                                  query_id=query.id)
    else:
        raise TypeError(f"unknown strategy {strategy!r}")

    return PerQueryResult(
        query_id=query.id,
        recall=recall_at_k(ranked, query.relevant),
        ap=average_precision(ranked, query.relevant),
        split=split,
    )


def evaluate_run(
    queries: QuerySet,
    embeddings: Mapping[str, EmbeddingMatrix],
    encoder: LinearEncoder | None,
    strategy: Strategy,
    k: int,
    query_vectors: Mapping[str, np.ndarray] | None = None,
    max_query_tokens: int | None = None,
    threads: int = 1,
) -> EvalReport:
    """Evaluate one strategy at one budget over a query set.

    Rows are aggregated in query-id order regardless of execution order
    (or thread count), so reports are reproducible bit for bit.
    """
    for cid in {c for q in queries for c in q.relevant}:
        if cid not in embeddings:
            raise MissingGold("", f"no embeddings for corpus {cid!r}")

    def job(query: Query) -> PerQueryResult:
        return _evaluate_query(query, embeddings, encoder, strategy, k,
                               query_vectors, max_query_tokens)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(job, queries.queries))
    else:
        rows = [job(q) for q in queries.queries]

    rows.sort(key=lambda r: r.query_id)
    n = len(rows)
    mean_recall = sum(r.recall for r in rows) / n if n else 0.0
    mean_ap = sum(r.ap for r in rows) / n if n else 0.0
    return EvalReport(k=k, strategy=strategy.label, mean_recall=mean_recall,
                      mean_ap=mean_ap, per_query=rows)


def rank_diagnostics(
    queries: QuerySet,
    embeddings: Mapping[str, EmbeddingMatrix],
    encoder: LinearEncoder | None,
    query_vectors: Mapping[str, np.ndarray] | None = None,
    max_query_tokens: int | None = None,
) -> RankDiagnostics:
    """Full-ranking position of every gold passage, per corpus.

    The histogram of these ranks shows how hard retrieval is from each
    corpus before/after training (rank 1 means the gold wins outright).
    """
    per_corpus: dict[str, list[RankRecord]] = {cid: [] for cid in sorted(embeddings)}
    for query in queries:
        if not query.relevant or all(not v for v in query.relevant.values()):
            raise MissingGold(query.id)
        qvec = _query_vector(query, encoder, query_vectors, max_query_tokens)
        for cid in sorted(query.relevant):
            matrix = embeddings[cid]
            for pid in sorted(query.relevant[cid]):
                rank = rank_of(qvec, matrix, pid)
                per_corpus[cid].append(RankRecord(
                    query_id=query.id, passage_id=pid, rank=rank,
                    normalized_rank=rank / len(matrix),
                ))
    return RankDiagnostics(per_corpus=per_corpus)


# --- report serialization ----------------------------------------------------


def format_split(split: Mapping[str, int]) -> str:
    return ";".join(f"{cid}={split[cid]}" for cid in sorted(split))


def report_csv_bytes(report: EvalReport) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["query_id", "recall", "ap", "split"])
    for row in report.per_query:
        writer.writerow([row.query_id, repr(row.recall), repr(row.ap),
                         format_split(row.split)])
    return buf.getvalue().encode("utf-8")


def report_summary_json(report: EvalReport) -> bytes:
    doc = {
        "k": report.k,
        "strategy": report.strategy,
        "mean_recall": report.mean_recall,
        "mean_ap": report.mean_ap,
        "n_queries": report.n_queries,
    }
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")


def write_report(report: EvalReport, csv_path, summary_path) -> None:
    write_atomic(csv_path, report_csv_bytes(report))
    write_atomic(summary_path, report_summary_json(report))


def diagnostics_csv_bytes(diag: RankDiagnostics) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["corpus_id", "query_id", "passage_id", "rank", "normalized_rank"])
    for cid in sorted(diag.per_corpus):
        for rec in diag.per_corpus[cid]:
            writer.writerow([cid, rec.query_id, rec.passage_id, rec.rank,
                             repr(rec.normalized_rank)])
    return buf.getvalue().encode("utf-8")
