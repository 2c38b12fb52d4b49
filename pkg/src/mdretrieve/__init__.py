"""Multi-distribution dense retrieval: a fixed budget of k passages is
retrieved across several corpora from different distributions, with
pluggable budget-allocation strategies (naive merging, per-task fractions,
per-query oracle) and an experiment harness around them."""

from .allocation import (
    NaiveMerge,
    PerQueryOracle,
    PerTask,
    apportion_budget,
    parse_strategy,
    retrieve_naive,
    retrieve_per_query_oracle,
    retrieve_per_task,
)
from .data import (
    BenchmarkManifest,
    Corpus,
    Passage,
    Query,
    QuerySet,
    SyntheticConfig,
    TrainingPair,
    build_entity_benchmark,
    generate_synthetic_benchmark,
    load_corpus,
    load_manifest,
    load_query_set,
    load_training_pairs,
    split_query_set,
)
from .encoder import (
    EmbeddingMatrix,
    LinearEncoder,
    embed_corpus,
    encode,
    init_encoder,
)
from .evaluation import (
    EvalReport,
    RankDiagnostics,
    evaluate_run,
    rank_diagnostics,
)
from .features import FeaturizerConfig, featurize, fnv1a64, tokenize
from .metrics import average_precision, recall_at_k
from .search import RankedList, ScoredHit, score_all, search_top_k, top_k
from .storage import (
    read_embeddings,
    read_encoder,
    write_embeddings,
    write_encoder,
)
from .sweeps import (
    SweepResult,
    TuneReport,
    datasize_sweep,
    fraction_sweep,
    k_sweep,
    seed_set_tune,
)
from .training import (
    TrainConfig,
    TrainReport,
    contrastive_loss,
    loss_gradient,
    sample_negative,
    train_encoder,
)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkManifest", "Corpus", "EmbeddingMatrix", "EvalReport",
    "FeaturizerConfig", "LinearEncoder", "NaiveMerge", "Passage",
    "PerQueryOracle", "PerTask", "Query", "QuerySet", "RankDiagnostics",
    "RankedList", "ScoredHit", "SweepResult", "SyntheticConfig",
    "TrainConfig", "TrainReport", "TrainingPair", "TuneReport",
    "apportion_budget", "average_precision", "build_entity_benchmark",
    "contrastive_loss", "datasize_sweep", "embed_corpus", "encode",
    "evaluate_run", "featurize", "fnv1a64", "fraction_sweep",
    "generate_synthetic_benchmark", "init_encoder", "k_sweep",
    "load_corpus", "load_manifest", "load_query_set", "load_training_pairs",
    "loss_gradient", "parse_strategy", "rank_diagnostics", "read_embeddings",
    "read_encoder", "recall_at_k", "retrieve_naive",
    "retrieve_per_query_oracle", "retrieve_per_task", "sample_negative",
    "score_all", "search_top_k", "seed_set_tune", "split_query_set",
    "tokenize", "top_k", "train_encoder", "write_embeddings", "write_encoder",
]
