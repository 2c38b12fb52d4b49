"""Experiment sweeps: fraction grid, budget sweep, training-size sweep, and
seed-set fraction tuning."""

from __future__ import annotations

import csv
import io
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .allocation import NaiveMerge, PerQueryOracle, PerTask
from .data import Corpus, QuerySet, TrainingPair
from .encoder import DEFAULT_DIM, EmbeddingMatrix, LinearEncoder, embed_corpus
from .errors import SeedSetTooLarge
from .evaluation import EvalReport, evaluate_run
from .features import FeaturizerConfig
from .rng import SplitMix64
from .training import TrainConfig, train_encoder

DEFAULT_GRID = tuple(round(i / 10, 1) for i in range(11))


@dataclass(frozen=True)
class SweepRow:
    axis_value: float
    strategy: str
    mean_recall: float
    mean_ap: float


@dataclass
class SweepResult:
    axis_label: str
    rows: list[SweepRow]

    def __post_init__(self):
        seen = set()
        for row in self.rows:
            key = (row.axis_value, row.strategy)
            if key in seen:
                raise ValueError(f"duplicate sweep row {key}")
            seen.add(key)
        per_strategy: dict[str, float] = {}
        for row in self.rows:
            prev = per_strategy.get(row.strategy)
            if prev is not None and row.axis_value <= prev:
                raise ValueError("axis values must be strictly increasing per strategy")
            per_strategy[row.strategy] = row.axis_value


@dataclass
class TuneTrial:
    chosen_fraction: float
    heldout_recall: float


@dataclass
class TuneReport:
    seed_set_size: int
    trials: list[TuneTrial]
    mean_heldout_recall: float
    std_heldout_recall: float  # population std (ddof=0)

    @property
    def n_trials(self) -> int:
        return len(self.trials)


def per_task_fractions(known_corpus_id: str, corpus_ids: Sequence[str], f: float) -> dict:
    others = [c for c in corpus_ids if c != known_corpus_id]
    fractions = {known_corpus_id: f}
    for c in others:
        fractions[c] = (1.0 - f) / len(others)
    return fractions


def pick_fraction(grid: Sequence[float], recalls: Mapping[float, float]) -> float:
    """Argmax recall over the grid; ties go to the fraction nearer 0.5,
    then the smaller one. Distances are rounded so grid points symmetric
    around 0.5 (e.g. 0.3 vs 0.7) tie exactly despite float noise."""
    return max(grid, key=lambda f: (recalls[f], -round(abs(f - 0.5), 9), -f))


def fraction_sweep(
    queries: QuerySet,
    embeddings: Mapping[str, EmbeddingMatrix],
    encoder: LinearEncoder | None,
    k: int,
    known_corpus_id: str,
    grid: Sequence[float] = DEFAULT_GRID,
    query_vectors=None,
    max_query_tokens: int | None = None,
) -> SweepResult:
    """One per-task evaluation per grid fraction (the Table-2-style rows)."""
    if any(not 0.0 <= f <= 1.0 for f in grid):
        raise ValueError("grid fractions must lie in [0, 1]")
    cids = sorted(embeddings)
    rows = []
    for f in grid:
        strategy = PerTask(per_task_fractions(known_corpus_id, cids, f))
        report = evaluate_run(queries, embeddings, encoder, strategy, k,
                              query_vectors=query_vectors,
                              max_query_tokens=max_query_tokens)
        rows.append(SweepRow(axis_value=f, strategy="per-task",
                             mean_recall=report.mean_recall, mean_ap=report.mean_ap))
    return SweepResult(axis_label="fraction", rows=rows)


def _evaluate_strategy_spec(
    spec: str,
    queries: QuerySet,
    embeddings: Mapping[str, EmbeddingMatrix],
    encoder: LinearEncoder | None,
    k: int,
    known_corpus_id: str,
    grid: Sequence[float],
    query_vectors=None,
    max_query_tokens: int | None = None,
) -> EvalReport:
    """Evaluate "naive" | "oracle" | "per-task:best" | "per-task:<f>"."""
    cids = sorted(embeddings)
    if spec == "naive":
        strategy = NaiveMerge()
    elif spec == "oracle":
        strategy = PerQueryOracle()
    elif spec == "per-task:best":
        recalls = {}
        reports = {}
        for f in grid:
            report = evaluate_run(
                queries, embeddings, encoder,
                PerTask(per_task_fractions(known_corpus_id, cids, f)), k,
                query_vectors=query_vectors, max_query_tokens=max_query_tokens)
            recalls[f] = report.mean_recall
            reports[f] = report
        return reports[pick_fraction(grid, recalls)]
    elif spec.startswith("per-task:"):
        f = float(spec[len("per-task:"):])
        strategy = PerTask(per_task_fractions(known_corpus_id, cids, f))
    else:
        raise ValueError(f"unknown strategy spec {spec!r}")
    return evaluate_run(queries, embeddings, encoder, strategy, k,
                        query_vectors=query_vectors,
                        max_query_tokens=max_query_tokens)


def k_sweep(
    queries: QuerySet,
    embeddings: Mapping[str, EmbeddingMatrix],
    encoder: LinearEncoder | None,
    ks: Sequence[int],
    strategies: Sequence[str] = ("naive", "per-task:best", "oracle"),
    known_corpus_id: str = "",
    grid: Sequence[float] = DEFAULT_GRID,
    query_vectors=None,
    max_query_tokens: int | None = None,
) -> SweepResult:
    """Evaluate each strategy at each budget; "per-task:best" re-selects the
    best grid fraction at every k."""
    if list(ks) != sorted(set(ks)):
        raise ValueError("ks must be strictly increasing")
    rows = []
    for k in ks:
        for spec in strategies:
            report = _evaluate_strategy_spec(
                spec, queries, embeddings, encoder, k, known_corpus_id, grid,
                query_vectors=query_vectors, max_query_tokens=max_query_tokens)
            rows.append(SweepRow(axis_value=float(k), strategy=spec,
                                 mean_recall=report.mean_recall,
                                 mean_ap=report.mean_ap))
    return SweepResult(axis_label="k", rows=rows)


def datasize_sweep(
    pairs: list[TrainingPair],
    corpora: Mapping[str, Corpus],
    known_corpus_id: str,
    queries: QuerySet,
    fractions_of_train: Sequence[float],
    train_config: TrainConfig,
    k: int,
    featurizer: FeaturizerConfig | None = None,
    out_dim: int = DEFAULT_DIM,
    strategies: Sequence[str] = ("naive", "per-task:best", "oracle"),
    grid: Sequence[float] = DEFAULT_GRID,
) -> SweepResult:
    """Retrain on growing shares of the training pairs and evaluate.

    The selection shuffle picks which pairs participate; the selected
    pairs keep their original order, so fraction 1.0 is bit-identical to
    training on the full list.
    """
    if any(not 0.0 < f <= 1.0 for f in fractions_of_train):
        raise ValueError("training fractions must lie in (0, 1]")
    order = list(range(len(pairs)))
    SplitMix64(train_config.seed).shuffle(order)
    rows = []
    for frac in fractions_of_train:
        n_take = max(1, math.ceil(frac * len(pairs)))
        subset = [pairs[i] for i in sorted(order[:n_take])]
        encoder, _ = train_encoder(subset, corpora[known_corpus_id], train_config,
                                   featurizer=featurizer, out_dim=out_dim)
        embeddings = {
            cid: embed_corpus(encoder, corpus,
                              max_tokens=train_config.max_passage_tokens)
            for cid, corpus in corpora.items()
        }
        for spec in strategies:
            report = _evaluate_strategy_spec(
                spec, queries, embeddings, encoder, k, known_corpus_id, grid,
                max_query_tokens=train_config.max_query_tokens)
            rows.append(SweepRow(axis_value=frac, strategy=spec,
                                 mean_recall=report.mean_recall,
                                 mean_ap=report.mean_ap))
    return SweepResult(axis_label="train_fraction", rows=rows)


def seed_set_tune(
    val_queries: QuerySet,
    test_queries: QuerySet,
    embeddings: Mapping[str, EmbeddingMatrix],
    encoder: LinearEncoder | None,
    k: int,
    known_corpus_id: str,
    seed_sizes: Sequence[int],
    trials: int,
    rng_seed: int,
    grid: Sequence[float] = DEFAULT_GRID,
    query_vectors=None,
    max_query_tokens: int | None = None,
) -> list[TuneReport]:
    """Pick the per-task fraction on sampled seed sets, score it held-out.

    Per trial: sample `size` validation queries without replacement, choose
    the grid fraction with the best seed-set recall (ties toward 0.5, then
    smaller), and record that fraction's mean recall on the test queries.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    for size in seed_sizes:
        if size > len(val_queries):
            raise SeedSetTooLarge(size, len(val_queries))
        if size < 1:
            raise ValueError("seed sizes must be >= 1")

    # Per-task evaluation is per-query independent, so one pass per fraction
    # over val/test is enough; seed-set means are then just row averages.
    val_recall_rows: dict[float, np.ndarray] = {}
    test_mean: dict[float, float] = {}
    cids = sorted(embeddings)
    for f in grid:
        strategy = PerTask(per_task_fractions(known_corpus_id, cids, f))
        val_report = evaluate_run(val_queries, embeddings, encoder, strategy, k,
                                  query_vectors=query_vectors,
                                  max_query_tokens=max_query_tokens)
        by_id = {r.query_id: r.recall for r in val_report.per_query}
        val_recall_rows[f] = np.array([by_id[q.id] for q in val_queries],
                                      dtype=np.float64)
        test_report = evaluate_run(test_queries, embeddings, encoder, strategy, k,
                                   query_vectors=query_vectors,
                                   max_query_tokens=max_query_tokens)
        test_mean[f] = test_report.mean_recall

    rng = SplitMix64(rng_seed)
    reports = []
    for size in seed_sizes:
        rows = []
        for _ in range(trials):
            picked = rng.sample_indices(len(val_queries), size)
            seed_recalls = {f: float(val_recall_rows[f][picked].mean()) for f in grid}
            chosen = pick_fraction(grid, seed_recalls)
            rows.append(TuneTrial(chosen_fraction=chosen,
                                  heldout_recall=test_mean[chosen]))
        values = np.array([t.heldout_recall for t in rows], dtype=np.float64)
        reports.append(TuneReport(
            seed_set_size=size,
            trials=rows,
            mean_heldout_recall=float(values.mean()),
            std_heldout_recall=float(values.std()),
        ))
    return reports


# --- CSV / JSON emitters ------------------------------------------------------


def sweep_csv_bytes(result: SweepResult) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([result.axis_label, "strategy", "mean_recall", "mean_ap"])
    for row in sorted(result.rows, key=lambda r: (r.axis_value, r.strategy)):
        writer.writerow([repr(row.axis_value), row.strategy,
                         repr(row.mean_recall), repr(row.mean_ap)])
    return buf.getvalue().encode("utf-8")


def tune_csv_bytes(reports: list[TuneReport]) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["size", "trial", "chosen_fraction", "heldout_recall"])
    for report in reports:
        for i, trial in enumerate(report.trials):
            writer.writerow([report.seed_set_size, i,
                             repr(trial.chosen_fraction), repr(trial.heldout_recall)])
    return buf.getvalue().encode("utf-8")


def tune_summary_json(reports: list[TuneReport]) -> bytes:
    doc = [
        {
            "size": r.seed_set_size,
            "trials": r.n_trials,
            "mean_heldout_recall": r.mean_heldout_recall,
            "std_heldout_recall": r.std_heldout_recall,
        }
        for r in reports
    ]
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")
