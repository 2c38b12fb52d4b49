"""Contrastive training of the shared linear encoder.

One training example is (query, positive passage, sampled negative
passage), all projected through the same weight matrix W. With
s = f^T W^T W g for the two passage sides, the example loss is

    L = -log( exp(s_pos) / (exp(s_pos) + exp(s_neg)) )
      = log(1 + exp(s_neg - s_pos))

whose exact weight gradient (shared encoder, so the query and both
passages contribute) is

    dL/dW = sigmoid(s_neg - s_pos) * ( e_q (f_n - f_p)^T + (e_n - e_p) f_q^T )

with e_x = W f_x. Plain SGD on batch means; everything is deterministic
given the config seed.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .data import Corpus, Passage, TrainingPair
from .encoder import DEFAULT_DIM, LinearEncoder, init_encoder
from .errors import CorpusTooSmall, DanglingReference, EmptyTrainingSet, InvalidConfig
from .features import FeaturizerConfig, FeatureVector, featurize
from .rng import SplitMix64

MAX_QUERY_TOKENS = 70
MAX_PASSAGE_TOKENS = 300


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 64
    epochs: int = 10
    learning_rate: float = 5.0
    seed: int = 0
    max_query_tokens: int = MAX_QUERY_TOKENS
    max_passage_tokens: int = MAX_PASSAGE_TOKENS

    def __post_init__(self):
        if self.batch_size < 1:
            raise InvalidConfig("batch_size must be >= 1")
        if self.epochs < 1:
            raise InvalidConfig("epochs must be >= 1")
        if not self.learning_rate >= 0:  # also rejects NaN
            raise InvalidConfig("learning_rate must be >= 0")


@dataclass
class TrainReport:
    per_epoch_loss: list[float]
    final_checksum: int  # CRC32 of the final float32 weight bytes


def contrastive_loss(s_pos: float, s_neg: float) -> float:
    """log(1 + exp(s_neg - s_pos)), evaluated without overflow."""
    d = s_neg - s_pos
    if d > 0:
        return d + math.log1p(math.exp(-d))
    return math.log1p(math.exp(d))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def _sparse_diff(a: FeatureVector, b: FeatureVector) -> tuple[np.ndarray, np.ndarray]:
    """Indices/values of (a - b) with unique indices."""
    acc: dict[int, float] = {}
    for i, v in zip(a.indices.tolist(), a.values.tolist()):
        acc[i] = acc.get(i, 0.0) + v
    for i, v in zip(b.indices.tolist(), b.values.tolist()):
        acc[i] = acc.get(i, 0.0) - v
    idx = np.array(sorted(acc), dtype=np.int64)
    vals = np.array([acc[i] for i in idx], dtype=np.float64)
    return idx, vals


def _project(weights64: np.ndarray, f: FeatureVector) -> np.ndarray:
    if f.nnz == 0:
        return np.zeros(weights64.shape[0], dtype=np.float64)
    return weights64[:, f.indices] @ f.values


def _example_loss_grad(
    weights64: np.ndarray,
    f_q: FeatureVector,
    f_p: FeatureVector,
    f_n: FeatureVector,
    grad_out: np.ndarray | None = None,
) -> float:
    """Example loss; if grad_out is given, add the example gradient into it."""
    e_q = _project(weights64, f_q)
    e_p = _project(weights64, f_p)
    e_n = _project(weights64, f_n)
    s_pos = float(e_q @ e_p)
    s_neg = float(e_q @ e_n)
    if grad_out is not None:
        sig = _sigmoid(s_neg - s_pos)
        diff_idx, diff_vals = _sparse_diff(f_n, f_p)
        if len(diff_idx):
            grad_out[:, diff_idx] += sig * np.outer(e_q, diff_vals)
        if f_q.nnz:
            grad_out[:, f_q.indices] += sig * np.outer(e_n - e_p, f_q.values)
    return contrastive_loss(s_pos, s_neg)


def loss_gradient(
    encoder: LinearEncoder,
    q_text: str,
    p_text: str,
    p_neg_text: str,
) -> np.ndarray:
    """Exact gradient of the example loss w.r.t. the shared weights (float64)."""
    cfg = encoder.featurizer
    f_q = featurize(q_text, cfg)
    f_p = featurize(p_text, cfg)
    f_n = featurize(p_neg_text, cfg)
    grad = np.zeros((encoder.out_dim, cfg.n_buckets), dtype=np.float64)
    _example_loss_grad(encoder.weights.astype(np.float64), f_q, f_p, f_n, grad)
    return grad


def example_loss(encoder: LinearEncoder, q_text: str, p_text: str, p_neg_text: str) -> float:
    cfg = encoder.featurizer
    return _example_loss_grad(
        encoder.weights.astype(np.float64),
        featurize(q_text, cfg), featurize(p_text, cfg), featurize(p_neg_text, cfg),
    )


def sample_negative(rng: SplitMix64, corpus: Corpus, exclude: str) -> Passage:
    """Uniform draw over the corpus excluding the positive passage."""
    if len(corpus) < 2:
        raise CorpusTooSmall(f"corpus {corpus.corpus_id!r} has {len(corpus)} passages")
    skip = corpus.index_of(exclude)
    j = rng.randint_below(len(corpus) - 1)
    if j >= skip:
        j += 1
    return corpus.passages[j]


def train_encoder(
    pairs: list[TrainingPair],
    corpus: Corpus,
    config: TrainConfig,
    featurizer: FeaturizerConfig | None = None,
    out_dim: int = DEFAULT_DIM,
    initial: LinearEncoder | None = None,
) -> tuple[LinearEncoder, TrainReport]:
    """SGD over epochs of shuffled mini-batches, one sampled negative per
    example per epoch. Weights are kept in float64 while training and cast
    to float32 at the end, so learning_rate=0 is an exact no-op."""
    if not pairs:
        raise EmptyTrainingSet("no training pairs")
    if len(corpus) < 2:
        raise CorpusTooSmall(f"corpus {corpus.corpus_id!r} has {len(corpus)} passages")
    for pair in pairs:
        if pair.corpus_id != corpus.corpus_id:
            raise InvalidConfig(
                f"training pair names corpus {pair.corpus_id!r}, expected {corpus.corpus_id!r}"
            )
        if pair.positive_passage_id not in corpus:
            raise DanglingReference(pair.query_text, pair.corpus_id,
                                    pair.positive_passage_id)

    encoder = initial or init_encoder(featurizer, out_dim, seed=config.seed)
    cfg = encoder.featurizer
    weights = encoder.weights.astype(np.float64)

    f_query = [featurize(p.query_text, cfg, max_tokens=config.max_query_tokens)
               for p in pairs]
    passage_features: dict[str, FeatureVector] = {}

    def passage_fv(pid: str) -> FeatureVector:
        fv = passage_features.get(pid)
        if fv is None:
            fv = featurize(corpus.get(pid).text, cfg,
                           max_tokens=config.max_passage_tokens)
            passage_features[pid] = fv
        return fv

    rng = SplitMix64(config.seed)
    grad = np.empty_like(weights)
    per_epoch_loss = []
    for _ in range(config.epochs):
        order = list(range(len(pairs)))
        rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, len(order), config.batch_size):
            batch = order[start:start + config.batch_size]
            grad[:] = 0.0
            for idx in batch:
                pair = pairs[idx]
                negative = sample_negative(rng, corpus, pair.positive_passage_id)
                epoch_loss += _example_loss_grad(
                    weights, f_query[idx],
                    passage_fv(pair.positive_passage_id),
                    passage_fv(negative.id),
                    grad,
                )
            weights -= (config.learning_rate / len(batch)) * grad
        per_epoch_loss.append(epoch_loss / len(order))

    final = weights.astype(np.float32)
    trained = LinearEncoder(featurizer=cfg, out_dim=encoder.out_dim,
                            weights=final, seed=encoder.seed)
    report = TrainReport(per_epoch_loss=per_epoch_loss,
                         final_checksum=zlib.crc32(final.tobytes()))
    return trained, report
