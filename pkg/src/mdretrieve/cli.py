"""Command-line front door.

Every command writes its outputs under --out plus a run_manifest.json
recording the arguments and SHA-256 checksums of all inputs and outputs,
so identical invocations are provably byte-identical. Exit codes:
0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

from .allocation import parse_strategy
from .data import (
    BenchmarkManifest,
    QuerySet,
    SyntheticConfig,
    build_entity_benchmark,
    generate_synthetic_benchmark,
    load_corpus,
    load_manifest,
    load_matches,
    load_query_set,
    load_training_pairs,
    save_corpus,
    save_manifest,
    save_query_set,
    save_training_pairs,
    split_query_set,
)
from .encoder import DEFAULT_DIM, embed_corpus
from .errors import DataError, MissingFile
from .evaluation import (
    diagnostics_csv_bytes,
    evaluate_run,
    rank_diagnostics,
    report_csv_bytes,
    report_summary_json,
)
from .features import FeaturizerConfig
from .storage import (
    read_embeddings,
    read_encoder,
    write_atomic,
    write_embeddings,
    write_encoder,
)
from .sweeps import (
    DEFAULT_GRID,
    datasize_sweep,
    fraction_sweep,
    k_sweep,
    seed_set_tune,
    sweep_csv_bytes,
    tune_csv_bytes,
    tune_summary_json,
)
from .training import (
    MAX_PASSAGE_TOKENS,
    MAX_QUERY_TOKENS,
    TrainConfig,
    train_encoder,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we want exit 1
        raise UsageError(message)


def _sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class RunContext:
    """Tracks inputs/outputs of one command for the run manifest."""

    def __init__(self, command: str, argv: list[str], out_dir: str):
        self.command = command
        self.argv = argv
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.inputs: dict[str, str] = {}
        self.outputs: dict[str, str] = {}

    def track_input(self, path) -> Path:
        path = Path(path)
        if not path.is_file():
            raise MissingFile(path)
        self.inputs[str(path)] = _sha256(path)
        return path

    def write(self, name: str, payload: bytes) -> Path:
        path = self.out_dir / name
        write_atomic(path, payload)
        self.outputs[name] = hashlib.sha256(payload).hexdigest()
        return path

    def write_with(self, name: str, writer) -> Path:
        """For writers that only take a path (corpus/query/encoder files)."""
        path = self.out_dir / name
        writer(path)
        self.outputs[name] = _sha256(path)
        return path

    def finish(self) -> None:
        doc = {
            "command": self.command,
            "argv": self.argv,
            "inputs": dict(sorted(self.inputs.items())),
            "outputs": dict(sorted(self.outputs.items())),
        }
        payload = (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")
        write_atomic(self.out_dir / "run_manifest.json", payload)


def _load_manifest_corpora(ctx: RunContext, manifest_path: str):
    manifest = load_manifest(ctx.track_input(manifest_path))
    corpora = {}
    for cid, path in manifest.corpora:
        corpora[cid] = load_corpus(ctx.track_input(path), cid)
    return manifest, corpora


def _load_split_queries(ctx: RunContext, manifest: BenchmarkManifest, corpora,
                        split: str) -> QuerySet:
    path = manifest.queries_val if split == "val" else manifest.queries_test
    return load_query_set(ctx.track_input(path), list(corpora.values()))


def _load_embeddings_dir(ctx: RunContext, manifest: BenchmarkManifest, emb_dir: str):
    embeddings = {}
    for cid, _ in manifest.corpora:
        path = Path(emb_dir) / f"{cid}.mdre"
        embeddings[cid] = read_embeddings(ctx.track_input(path), corpus_id=cid)
    return embeddings


def _load_query_vectors(ctx: RunContext, path: str, queries: QuerySet):
    matrix = read_embeddings(ctx.track_input(path), corpus_id="queries")
    vectors = {pid: matrix.values[i] for i, pid in enumerate(matrix.ids)}
    missing = [q.id for q in queries if q.id not in vectors]
    if missing:
        raise DataError(f"query embeddings {path} lack ids: {missing[:5]}")
    return vectors


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x != ""]
    except ValueError:
        raise UsageError(f"expected comma-separated floats, got {text!r}") from None


def _parse_ints(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x != ""]
    except ValueError:
        raise UsageError(f"expected comma-separated ints, got {text!r}") from None


def _strategy(args, manifest: BenchmarkManifest, embeddings):
    try:
        return parse_strategy(args.strategy, sorted(embeddings), manifest.known_corpus_id)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _encoder_and_vectors(ctx, args, queries):
    """Either a checkpointed encoder or imported query vectors (or both)."""
    encoder = None
    query_vectors = None
    if getattr(args, "query_embeddings", None):
        query_vectors = _load_query_vectors(ctx, args.query_embeddings, queries)
    if getattr(args, "encoder", None):
        encoder = read_encoder(ctx.track_input(args.encoder))
    if encoder is None and query_vectors is None:
        raise UsageError("need --encoder or --query-embeddings")
    return encoder, query_vectors


# --- commands -----------------------------------------------------------------


def cmd_build_benchmark(args, argv) -> int:
    ctx = RunContext("build-benchmark", argv, args.out)
    if args.mode == "synthetic":
        config = SyntheticConfig(
            seed=args.seed,
            n_pairs=args.pairs,
            n_distractors_per_query=args.distractors,
            style_a_vocab=args.style_a_vocab,
            style_b_vocab=args.style_b_vocab,
            n_entity_tokens=args.entity_tokens,
            n_filler_tokens=args.filler_tokens,
        )
        bench = generate_synthetic_benchmark(config)
        corpora = [bench.corpus_a, bench.corpus_b]
        val, test = split_query_set(bench.queries, args.seed)
        train_pairs = bench.train_a
        known = bench.corpus_a.corpus_id
    else:
        corpus_a = load_corpus(ctx.track_input(args.corpus_a), args.corpus_a_id)
        corpus_b = load_corpus(ctx.track_input(args.corpus_b), args.corpus_b_id)
        matches = load_matches(ctx.track_input(args.matches))
        bench = build_entity_benchmark(corpus_a, corpus_b, matches, args.seed,
                                       sides=args.sides)
        corpora = [corpus_a, corpus_b]
        val, test = bench.val, bench.test
        known = args.corpus_a_id if args.known_side == "a" else args.corpus_b_id
        train_pairs = bench.train_a if args.known_side == "a" else bench.train_b

    corpus_entries = []
    for corpus in corpora:
        name = f"corpus_{corpus.corpus_id}.jsonl"
        ctx.write_with(name, lambda p, c=corpus: save_corpus(c, p))
        corpus_entries.append((corpus.corpus_id, ctx.out_dir / name))
    ctx.write_with("queries_val.jsonl", lambda p: save_query_set(val, p))
    ctx.write_with("queries_test.jsonl", lambda p: save_query_set(test, p))
    ctx.write_with("train_pairs.jsonl", lambda p: save_training_pairs(train_pairs, p))
    manifest = BenchmarkManifest(
        corpora=corpus_entries,
        queries_val=ctx.out_dir / "queries_val.jsonl",
        queries_test=ctx.out_dir / "queries_test.jsonl",
        training_pairs=ctx.out_dir / "train_pairs.jsonl",
        known_corpus_id=known,
    )
    ctx.write_with("manifest.json", lambda p: save_manifest(manifest, p))
    ctx.finish()
    return 0


def cmd_embed(args, argv) -> int:
    ctx = RunContext("embed", argv, args.out)
    manifest, corpora = _load_manifest_corpora(ctx, args.manifest)
    if args.import_mdre:
        if not args.corpus_id:
            raise UsageError("--import-mdre needs --corpus-id")
        if args.corpus_id not in corpora:
            raise DataError(f"corpus {args.corpus_id!r} not in manifest")
        matrix = read_embeddings(ctx.track_input(args.import_mdre),
                                 corpus_id=args.corpus_id)
        corpus = corpora[args.corpus_id]
        expected = [p.id for p in corpus.passages]
        if matrix.ids != expected:
            raise DataError(
                f"imported ids do not match corpus {args.corpus_id!r} order "
                f"({len(matrix.ids)} vs {len(expected)} ids)"
            )
        ctx.write_with(f"{args.corpus_id}.mdre",
                       lambda p: write_embeddings(matrix, p))
    else:
        if not args.encoder:
            raise UsageError("need --encoder (or --import-mdre)")
        encoder = read_encoder(ctx.track_input(args.encoder))
        for cid, corpus in sorted(corpora.items()):
            matrix = embed_corpus(encoder, corpus, max_tokens=args.max_passage_tokens)
            ctx.write_with(f"{cid}.mdre", lambda p, m=matrix: write_embeddings(m, p))
    ctx.finish()
    return 0


def cmd_train(args, argv) -> int:
    ctx = RunContext("train", argv, args.out)
    manifest, corpora = _load_manifest_corpora(ctx, args.manifest)
    pairs = load_training_pairs(ctx.track_input(manifest.training_pairs))
    config = TrainConfig(
        batch_size=args.batch_size,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        seed=args.seed,
        max_query_tokens=args.max_query_tokens,
        max_passage_tokens=args.max_passage_tokens,
    )
    featurizer = FeaturizerConfig(n_buckets=args.buckets)
    encoder, report = train_encoder(
        pairs, corpora[manifest.known_corpus_id], config,
        featurizer=featurizer, out_dim=args.dim,
    )
    ctx.write_with("encoder.mdrw", lambda p: write_encoder(encoder, p))
    report_doc = {
        "per_epoch_loss": report.per_epoch_loss,
        "final_checksum": report.final_checksum,
        "epochs": config.epochs,
        "batch_size": config.batch_size,
        "learning_rate": config.learning_rate,
        "seed": config.seed,
    }
    ctx.write("train_report.json",
              (json.dumps(report_doc, sort_keys=True, indent=2) + "\n").encode("utf-8"))
    ctx.finish()
    return 0


def cmd_eval(args, argv) -> int:
    ctx = RunContext("eval", argv, args.out)
    manifest, corpora = _load_manifest_corpora(ctx, args.manifest)
    queries = _load_split_queries(ctx, manifest, corpora, args.split)
    embeddings = _load_embeddings_dir(ctx, manifest, args.embeddings)
    encoder, query_vectors = _encoder_and_vectors(ctx, args, queries)
    strategy = _strategy(args, manifest, embeddings)
    report = evaluate_run(queries, embeddings, encoder, strategy, args.k,
                          query_vectors=query_vectors,
                          max_query_tokens=args.max_query_tokens,
                          threads=args.threads)
    ctx.write("report.csv", report_csv_bytes(report))
    ctx.write("summary.json", report_summary_json(report))
    ctx.finish()
    print(f"{report.strategy} @ k={report.k}: "
          f"{100 * report.mean_recall:.2f}/{100 * report.mean_ap:.2f} "
          f"(recall/AP, {report.n_queries} queries)")
    return 0


def cmd_sweep_fraction(args, argv) -> int:
    ctx = RunContext("sweep-fraction", argv, args.out)
    manifest, corpora = _load_manifest_corpora(ctx, args.manifest)
    queries = _load_split_queries(ctx, manifest, corpora, args.split)
    embeddings = _load_embeddings_dir(ctx, manifest, args.embeddings)
    encoder, query_vectors = _encoder_and_vectors(ctx, args, queries)
    grid = _parse_floats(args.grid) if args.grid else list(DEFAULT_GRID)
    result = fraction_sweep(queries, embeddings, encoder, args.k,
                            manifest.known_corpus_id, grid,
                            query_vectors=query_vectors,
                            max_query_tokens=args.max_query_tokens)
    ctx.write("sweep_fraction.csv", sweep_csv_bytes(result))
    # naive and oracle side by side for the Table-2-style comparison
    sides = {}
    for name, spec in (("naive", "naive"), ("oracle", "oracle")):
        rep = evaluate_run(queries, embeddings, encoder,
                           parse_strategy(spec, sorted(embeddings),
                                          manifest.known_corpus_id),
                           args.k, query_vectors=query_vectors,
                           max_query_tokens=args.max_query_tokens)
        sides[name] = {"mean_recall": rep.mean_recall, "mean_ap": rep.mean_ap}
    ctx.write("baselines.json",
              (json.dumps(sides, sort_keys=True, indent=2) + "\n").encode("utf-8"))
    ctx.finish()
    return 0


def cmd_sweep_k(args, argv) -> int:
    ctx = RunContext("sweep-k", argv, args.out)
    manifest, corpora = _load_manifest_corpora(ctx, args.manifest)
    queries = _load_split_queries(ctx, manifest, corpora, args.split)
    embeddings = _load_embeddings_dir(ctx, manifest, args.embeddings)
    encoder, query_vectors = _encoder_and_vectors(ctx, args, queries)
    ks = _parse_ints(args.ks)
    strategies = [s.strip() for s in args.strategies.split(",") if s.strip()]
    grid = _parse_floats(args.grid) if args.grid else list(DEFAULT_GRID)
    try:
        result = k_sweep(queries, embeddings, encoder, ks, strategies,
                         manifest.known_corpus_id, grid,
                         query_vectors=query_vectors,
                         max_query_tokens=args.max_query_tokens)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ctx.write("sweep_k.csv", sweep_csv_bytes(result))
    ctx.finish()
    return 0


def cmd_sweep_datasize(args, argv) -> int:
    ctx = RunContext("sweep-datasize", argv, args.out)
    manifest, corpora = _load_manifest_corpora(ctx, args.manifest)
    queries = _load_split_queries(ctx, manifest, corpora, args.split)
    pairs = load_training_pairs(ctx.track_input(manifest.training_pairs))
    config = TrainConfig(
        batch_size=args.batch_size,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        seed=args.seed,
        max_query_tokens=args.max_query_tokens,
        max_passage_tokens=args.max_passage_tokens,
    )
    fractions = _parse_floats(args.fractions)
    try:
        result = datasize_sweep(
            pairs, corpora, manifest.known_corpus_id, queries, fractions, config,
            args.k, featurizer=FeaturizerConfig(n_buckets=args.buckets),
            out_dim=args.dim,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    ctx.write("sweep_datasize.csv", sweep_csv_bytes(result))
    ctx.finish()
    return 0


def cmd_tune(args, argv) -> int:
    ctx = RunContext("tune", argv, args.out)
    manifest, corpora = _load_manifest_corpora(ctx, args.manifest)
    val = _load_split_queries(ctx, manifest, corpora, "val")
    test = _load_split_queries(ctx, manifest, corpora, "test")
    embeddings = _load_embeddings_dir(ctx, manifest, args.embeddings)
    encoder = read_encoder(ctx.track_input(args.encoder)) if args.encoder else None
    if encoder is None:
        raise UsageError("tune needs --encoder")
    sizes = _parse_ints(args.sizes)
    grid = _parse_floats(args.grid) if args.grid else list(DEFAULT_GRID)
    reports = seed_set_tune(val, test, embeddings, encoder, args.k,
                            manifest.known_corpus_id, sizes, args.trials,
                            args.tune_seed, grid,
                            max_query_tokens=args.max_query_tokens)
    ctx.write("tune.csv", tune_csv_bytes(reports))
    ctx.write("tune_summary.json", tune_summary_json(reports))
    ctx.finish()
    return 0


def cmd_diagnose_ranks(args, argv) -> int:
    ctx = RunContext("diagnose-ranks", argv, args.out)
    manifest, corpora = _load_manifest_corpora(ctx, args.manifest)
    queries = _load_split_queries(ctx, manifest, corpora, args.split)
    embeddings = _load_embeddings_dir(ctx, manifest, args.embeddings)
    encoder, query_vectors = _encoder_and_vectors(ctx, args, queries)
    diag = rank_diagnostics(queries, embeddings, encoder,
                            query_vectors=query_vectors,
                            max_query_tokens=args.max_query_tokens)
    ctx.write("ranks.csv", diagnostics_csv_bytes(diag))
    ctx.finish()
    return 0


# --- parser -------------------------------------------------------------------


def _add_eval_io_flags(p, with_encoder=True):
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True,
                   help="directory holding <corpus_id>.mdre files")
    if with_encoder:
        p.add_argument("--encoder", default=None, help="MDRW checkpoint")
        p.add_argument("--query-embeddings", default=None,
                       help="MDRE file of precomputed query vectors")
    p.add_argument("--split", choices=("val", "test"), default="test")
    p.add_argument("--max-query-tokens", type=int, default=MAX_QUERY_TOKENS)
    p.add_argument("--out", required=True)


def _add_train_flags(p):
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--learning-rate", type=float, default=5.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--buckets", type=int, default=32768)
    p.add_argument("--dim", type=int, default=DEFAULT_DIM)
    p.add_argument("--max-query-tokens", type=int, default=MAX_QUERY_TOKENS)
    p.add_argument("--max-passage-tokens", type=int, default=MAX_PASSAGE_TOKENS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mdretrieve",
                     description="multi-distribution retrieval experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-benchmark", help="create benchmark files + manifest")
    p.add_argument("mode", choices=("synthetic", "entity"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--pairs", type=int, default=100)
    p.add_argument("--distractors", type=int, default=5)
    p.add_argument("--style-a-vocab", type=int, default=40)
    p.add_argument("--style-b-vocab", type=int, default=40)
    p.add_argument("--entity-tokens", type=int, default=4)
    p.add_argument("--filler-tokens", type=int, default=40)
    p.add_argument("--corpus-a", default=None)
    p.add_argument("--corpus-b", default=None)
    p.add_argument("--corpus-a-id", default="A")
    p.add_argument("--corpus-b-id", default="B")
    p.add_argument("--matches", default=None)
    p.add_argument("--sides", choices=("both", "a", "b"), default="both")
    p.add_argument("--known-side", choices=("a", "b"), default="a")
    p.set_defaults(func=cmd_build_benchmark)

    p = sub.add_parser("embed", help="embed manifest corpora or import MDRE vectors")
    p.add_argument("--manifest", required=True)
    p.add_argument("--encoder", default=None)
    p.add_argument("--import-mdre", default=None)
    p.add_argument("--corpus-id", default=None)
    p.add_argument("--max-passage-tokens", type=int, default=MAX_PASSAGE_TOKENS)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("train", help="train the linear encoder")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate one strategy at one budget")
    p.add_argument("--strategy", required=True,
                   help="naive | per-task:<f> | oracle")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--threads", type=int, default=1)
    _add_eval_io_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep-fraction", help="per-task fraction grid")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--grid", default=None)
    _add_eval_io_flags(p)
    p.set_defaults(func=cmd_sweep_fraction)

    p = sub.add_parser("sweep-k", help="budget sweep per strategy")
    p.add_argument("--ks", required=True, help="comma-separated budgets")
    p.add_argument("--strategies", default="naive,per-task:best,oracle")
    p.add_argument("--grid", default=None)
    _add_eval_io_flags(p)
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("sweep-datasize", help="training-set size sweep (retrains)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--fractions", required=True, help="training fractions in (0,1]")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--split", choices=("val", "test"), default="test")
    p.add_argument("--out", required=True)
    _add_train_flags(p)
    p.set_defaults(func=cmd_sweep_datasize)

    p = sub.add_parser("tune", help="seed-set fraction selection")
    p.add_argument("--sizes", required=True, help="comma-separated seed-set sizes")
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--tune-seed", type=int, default=0)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--grid", default=None)
    _add_eval_io_flags(p)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("diagnose-ranks", help="gold-rank distributions per corpus")
    _add_eval_io_flags(p)
    p.set_defaults(func=cmd_diagnose_ranks)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args, argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
