"""CBOW embedding training with negative sampling.

Plain CBOW with one twist: when the center token carries a sense tag
(``prep::sense``), the context window shrinks to ``prep_window`` so the
sense vector is shaped by its immediate neighbors only. The default mode
is single-worker and bit-reproducible for a given seed; the optional
parallel mode trades that determinism for speed by letting workers race
on the shared parameter matrices.
"""

from __future__ import annotations

import logging
import math
import threading
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import SENSE_DELIMITER, Corpus, TaggedCorpus
from .embeddings import EmbeddingTable

logger = logging.getLogger(__name__)

LR_FLOOR_FRACTION = 1e-4   # linear decay ends at this fraction of initial_lr


@dataclass
class TrainConfig:
    dim: int = 300
    window: int = 5
    prep_window: int = 2
    negatives: int = 5
    epochs: int = 5
    initial_lr: float = 0.025
    min_count: int = 5
    subsample_threshold: float = 1e-3
    seed: int = 42

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be at least 1")
        if self.window < 1 or self.prep_window < 1:
            raise ValueError("window sizes must be at least 1")
        if self.prep_window > self.window:
            raise ValueError("prep_window must not exceed window")
        if self.negatives < 1:
            raise ValueError("negatives must be at least 1")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.initial_lr <= 0.0:
            raise ValueError("initial_lr must be positive")
        if self.min_count < 1:
            raise ValueError("min_count must be at least 1")
        if self.subsample_threshold <= 0.0:
            raise ValueError("subsample_threshold must be positive")


class Vocab:
    """Token inventory sorted by descending count, ties lexicographic.

    Carries the unigram^0.75 negative-sampling distribution as a cumulative
    weight array searched by binary search, and per-token keep
    probabilities for frequency subsampling.
    """

    def __init__(self, tokens: list[str], counts: list[int], threshold: float):
        self.tokens = list(tokens)
        self.counts = np.array(counts, dtype=np.int64)
        self.index = {tok: i for i, tok in enumerate(self.tokens)}
        self.total = int(self.counts.sum())
        weights = self.counts.astype(np.float64) ** 0.75
        cum = np.cumsum(weights)
        self.cum_weights = cum / cum[-1]
        # keep probability sqrt(t/f) + t/f from the relative frequency f;
        # probabilities >= 1 mean "never draw"
        if math.isinf(threshold):
            self.keep_prob = np.ones(len(self.tokens))
        else:
            rel = self.counts / self.total
            ratio = threshold / rel
            self.keep_prob = np.minimum(1.0, np.sqrt(ratio) + ratio)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    def sample_negatives(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Draw n token ids from the unigram^0.75 distribution."""
        return np.searchsorted(self.cum_weights, rng.random(n), side="right")


def build_vocab(corpus, min_count: int, threshold: float = math.inf) -> Vocab:
    """Count tokens and keep those reaching min_count."""
    counter: Counter[str] = Counter()
    for sentence in _sentences_of(corpus):
        counter.update(sentence)
    kept = [(tok, c) for tok, c in counter.items() if c >= min_count]
    if not kept:
        raise ValueError(f"no token reaches min_count={min_count}")
    kept.sort(key=lambda tc: (-tc[1], tc[0]))
    return Vocab([t for t, _ in kept], [c for _, c in kept], threshold)


def window_span(tokens: list[str], pos: int, window: int, prep_window: int
               ) -> tuple[int, int]:
    """Context span [lo, hi) around pos, center excluded by the caller.

    The window shrinks to prep_window exactly when the center token
    contains the sense delimiter.
    """
    win = prep_window if SENSE_DELIMITER in tokens[pos] else window
    return max(0, pos - win), min(len(tokens), pos + win + 1)


def _sentences_of(corpus) -> list[list[str]]:
    if isinstance(corpus, (Corpus, TaggedCorpus)):
        return corpus.sentences
    return list(corpus)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _example_terms(
    w_in: np.ndarray,
    w_out: np.ndarray,
    ctx_ids: list[int],
    target_ids: list[int],
    labels: np.ndarray,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss and exact gradients for one CBOW negative-sampling example.

    The input is the mean of the context rows; each target row is scored by
    a dot product through a sigmoid. Returns (loss, dLoss/d_mean,
    dLoss/d_target_rows).
    """
    l1 = w_in[ctx_ids].mean(axis=0)
    scores = w_out[target_ids] @ l1
    # -ln sigma(s) for positives, -ln sigma(-s) for negatives, stably
    loss = float(np.sum(np.logaddexp(0.0, np.where(labels > 0, -scores, scores))))
    err = _sigmoid(scores) - labels
    grad_out = np.outer(err, l1)
    grad_l1 = err @ w_out[target_ids]
    return loss, grad_l1, grad_out


class CbowTrainer:
    """Stateful trainer; train_cbow is the one-call wrapper around it."""

    def __init__(self, config: TrainConfig):
        self.config = config
        self.vocab: Vocab | None = None
        self.w_in: np.ndarray | None = None
        self.w_out: np.ndarray | None = None
        self.epoch_losses: list[float] = []

    def _init_params(self, rng: np.random.Generator) -> None:
        n, dim = len(self.vocab), self.config.dim
        bound = 0.5 / dim
        self.w_in = rng.uniform(-bound, bound, size=(n, dim))
        self.w_out = np.zeros((n, dim))

    def epoch_examples(self, sentences, rng: np.random.Generator, schedule=None):
        """Yield (center_id, ctx_ids, lr) for one pass over the sentences.

        Subsampling draws happen here, sentence by sentence; tokens whose
        keep probability is 1 consume no randomness. ``schedule`` is the
        mutable [t, T] pair driving the linear learning-rate decay.
        """
        cfg = self.config
        floor = cfg.initial_lr * LR_FLOOR_FRACTION
        for sentence in sentences:
            pairs = [
                (tok, self.vocab.index[tok]) for tok in sentence if tok in self.vocab
            ]
            if schedule is None:
                lr = cfg.initial_lr
            else:
                lr = max(floor, cfg.initial_lr * (1.0 - schedule[0] / schedule[1]))
                schedule[0] += len(pairs)
            kept = []
            for tok, idx in pairs:
                p = self.vocab.keep_prob[idx]
                if p >= 1.0 or rng.random() < p:
                    kept.append((tok, idx))
            if len(kept) < 2:
                continue
            kept_tokens = [tok for tok, _ in kept]
            for pos in range(len(kept)):
                lo, hi = window_span(kept_tokens, pos, cfg.window, cfg.prep_window)
                ctx_ids = [kept[i][1] for i in range(lo, hi) if i != pos]
                if not ctx_ids:
                    continue
                yield kept[pos][1], ctx_ids, lr

    def _train_pass(self, sentences, rng, schedule) -> tuple[float, int]:
        cfg = self.config
        loss_sum = 0.0
        n_examples = 0
        for center, ctx_ids, lr in self.epoch_examples(sentences, rng, schedule):
            negs: list[int] = []
            while len(negs) < cfg.negatives:
                draws = self.vocab.sample_negatives(rng, cfg.negatives - len(negs))
                negs.extend(int(j) for j in draws if j != center)
            targets = [center] + negs
            labels = np.zeros(len(targets))
            labels[0] = 1.0
            loss, grad_l1, grad_out = _example_terms(
                self.w_in, self.w_out, ctx_ids, targets, labels
            )
            for row, g in zip(targets, grad_out):
                self.w_out[row] -= lr * g
            step = (lr / len(ctx_ids)) * grad_l1
            for row in ctx_ids:
                self.w_in[row] -= step
            loss_sum += loss
            n_examples += 1
        return loss_sum, n_examples

    def fit(self, corpus, jobs: int = 1) -> EmbeddingTable:
        """Train and return the input-vector table, vocab order preserved."""
        cfg = self.config
        sentences = _sentences_of(corpus)
        self.vocab = build_vocab(sentences, cfg.min_count, cfg.subsample_threshold)
        if len(self.vocab) < 2:
            raise ValueError("vocabulary too small for negative sampling")
        rng = np.random.default_rng(cfg.seed)
        self._init_params(rng)
        total_tokens = sum(
            1 for sentence in sentences for tok in sentence if tok in self.vocab
        )
        self.epoch_losses = []
        if jobs <= 1:
            schedule = [0, max(1, cfg.epochs * total_tokens)]
            for epoch in range(cfg.epochs):
                loss_sum, n = self._train_pass(sentences, rng, schedule)
                self.epoch_losses.append(loss_sum / max(1, n))
                logger.info(
                    "epoch %d/%d: mean loss %.6f over %d examples",
                    epoch + 1, cfg.epochs, self.epoch_losses[-1], n,
                )
        else:
            self._fit_parallel(sentences, jobs)
        return EmbeddingTable(self.vocab.tokens, self.w_in.copy())

    def _fit_parallel(self, sentences, jobs: int) -> None:
        """Sharded workers with unsynchronized updates; not deterministic."""
        cfg = self.config
        shards = [sentences[w::jobs] for w in range(jobs)]
        shards = [s for s in shards if s]
        results: list[list[tuple[float, int]]] = [[] for _ in shards]

        def work(widx: int) -> None:
            shard = shards[widx]
            rng = np.random.default_rng(cfg.seed + 1 + widx)
            total = sum(
                1 for sentence in shard for tok in sentence if tok in self.vocab
            )
            schedule = [0, max(1, cfg.epochs * total)]
            for _ in range(cfg.epochs):
                results[widx].append(self._train_pass(shard, rng, schedule))

        threads = [
            threading.Thread(target=work, args=(w,)) for w in range(len(shards))
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for epoch in range(cfg.epochs):
            loss_sum = sum(results[w][epoch][0] for w in range(len(shards)))
            n = sum(results[w][epoch][1] for w in range(len(shards)))
            self.epoch_losses.append(loss_sum / max(1, n))


def train_cbow(corpus, config: TrainConfig, jobs: int = 1) -> EmbeddingTable:
    """Train CBOW embeddings over a (tagged) corpus."""
    return CbowTrainer(config).fit(corpus, jobs=jobs)


def gradient_check(config: TrainConfig, h: float = 1e-5) -> float:
    """Compare analytic example gradients against central finite differences.

    Builds one small random example (10 tokens, dimension capped at 8 by
    precondition) and returns the maximum relative error over every entry
    of both parameter matrices.
    """
    if config.dim > 8:
        raise ValueError("gradient_check expects dim <= 8")
    rng = np.random.default_rng(config.seed)
    n_vocab = 10
    w_in = rng.normal(0.0, 0.5, size=(n_vocab, config.dim))
    w_out = rng.normal(0.0, 0.5, size=(n_vocab, config.dim))
    # duplicate context row on purpose: gradients must accumulate
    ctx_ids = [0, 1, 1, 2]
    center = 3
    negs = [int(4 + rng.integers(n_vocab - 4)) for _ in range(config.negatives)]
    targets = [center] + negs
    labels = np.zeros(len(targets))
    labels[0] = 1.0

    _, grad_l1, grad_out = _example_terms(w_in, w_out, ctx_ids, targets, labels)
    analytic_in = np.zeros_like(w_in)
    for row in ctx_ids:
        analytic_in[row] += grad_l1 / len(ctx_ids)
    analytic_out = np.zeros_like(w_out)
    for row, g in zip(targets, grad_out):
        analytic_out[row] += g

    def loss_at(a_in: np.ndarray, a_out: np.ndarray) -> float:
        return _example_terms(a_in, a_out, ctx_ids, targets, labels)[0]

    max_rel = 0.0
    for mat, analytic in ((w_in, analytic_in), (w_out, analytic_out)):
        for i in range(mat.shape[0]):
            for j in range(mat.shape[1]):
                orig = mat[i, j]
                mat[i, j] = orig + h
                up = loss_at(w_in, w_out)
                mat[i, j] = orig - h
                down = loss_at(w_in, w_out)
                mat[i, j] = orig
                numeric = (up - down) / (2.0 * h)
                denom = max(abs(analytic[i, j]), abs(numeric), 1e-8)
                max_rel = max(max_rel, abs(analytic[i, j] - numeric) / denom)
    return max_rel
