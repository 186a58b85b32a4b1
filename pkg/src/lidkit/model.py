"""The linear bag-of-features classifier.

A text's hidden representation is the mean (optionally the raw sum) of the
embeddings of its words and hashed n-grams; a linear output layer plus
softmax turns that into class probabilities. Training is plain SGD with
cross-entropy loss and a linearly decaying learning rate.

The input matrix has one row per vocabulary word followed by ``bucket``
rows for hashed n-grams; the output matrix has one row per class label.
"""

from __future__ import annotations

import warnings
from collections.abc import Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .corpus import LabeledText
from .errors import ConfigError, DataError, EmptyCorpusError, SingleClassError
from .features import FeatureParams, FeatureVector, clean_text, featurize, tokenize
from .labels import Label


class SingleClassWarning(UserWarning):
    """Corpus contains one class only; the trained model would be trivial."""


@dataclass(frozen=True)
class TrainParams:
    """Training hyperparameters. ``pooling`` selects mean pooling
    (default; hidden norm independent of text length) or the raw-sum
    variant. Only mean pooling matches the scoring used at inference by
    default, so train and predict must agree on it."""

    dim: int = 16
    lr: float = 0.1
    epochs: int = 5
    seed: int = 0
    threads: int = 1
    loss: str = "softmax"
    pooling: str = "mean"
    feature: FeatureParams = field(default_factory=FeatureParams)

    def __post_init__(self) -> None:
        if self.dim < 1:
            raise ConfigError("dim must be >= 1")
        if self.lr <= 0:
            raise ConfigError("lr must be > 0")
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if self.loss != "softmax":
            raise ConfigError(f"unsupported loss {self.loss!r}")
        if self.pooling not in ("mean", "sum"):
            raise ConfigError(f"unsupported pooling {self.pooling!r}")


class Vocabulary:
    """Word list (with counts) and the fixed class-label order."""

    def __init__(self, words: Sequence[tuple[str, int]], labels: Sequence[Label]):
        self.words = [w for w, _ in words]
        self.counts = [c for _, c in words]
        self.labels = list(labels)
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.label_index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self.word_index) != len(self.words):
            raise DataError("duplicate words in vocabulary")
        if len(self.label_index) != len(self.labels):
            raise DataError("duplicate labels in vocabulary")

    def __repr__(self) -> str:
        return f"Vocabulary({len(self.words)} words, {len(self.labels)} labels)"


def build_vocab(corpus: Iterable[LabeledText], params: FeatureParams) -> Vocabulary:
    """Count tokens and collect labels from a single-label training stream.

    Words with frequency >= min_count are kept, ordered by count
    descending then first occurrence; labels are ordered by first
    occurrence. Warns (does not fail) when only one class is present.
    """
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    labels: list[Label] = []
    label_set: set[Label] = set()
    n_examples = 0
    for example in corpus:
        if len(example.labels) != 1:
            raise DataError(
                f"training example has {len(example.labels)} labels; exactly one required"
            )
        n_examples += 1
        (label,) = example.labels
        if label.is_other:
            raise DataError("'other' is a decision-layer output, not a trainable class")
        if label not in label_set:
            label_set.add(label)
            labels.append(label)
        for tok in tokenize(clean_text(example.text, params.normalize)):
            if tok not in counts:
                counts[tok] = 0
                first_seen[tok] = len(first_seen)
            counts[tok] += 1
    if n_examples == 0:
        raise EmptyCorpusError("no training examples")
    if len(labels) == 1:
        warnings.warn("corpus contains a single class", SingleClassWarning, stacklevel=2)
    kept = [w for w, c in counts.items() if c >= params.min_count]
    kept.sort(key=lambda w: (-counts[w], first_seen[w]))
    return Vocabulary([(w, counts[w]) for w in kept], labels)


@dataclass
class Prediction:
    """Ranked (label, probability) pairs, probability descending with ties
    broken by ascending label index. Probabilities come from the full
    softmax, never renormalized after truncation."""

    ranked: list[tuple[Label, float]]

    @property
    def top1(self) -> tuple[Label, float]:
        return self.ranked[0]

    def __len__(self) -> int:
        return len(self.ranked)


class Model:
    """A trained classifier: vocabulary, embedding matrix, output layer.

    Immutable once constructed (by convention) and safe to share across
    threads for prediction. Training-only hyperparameters (lr, epochs,
    seed) are not retained: the persistent state is exactly what the
    binary model format stores.
    """

    def __init__(
        self,
        vocab: Vocabulary,
        input_matrix: np.ndarray,
        output_matrix: np.ndarray,
        feature: FeatureParams,
        pooling: str = "mean",
    ):
        dim = input_matrix.shape[1]
        if input_matrix.shape != (len(vocab.words) + feature.bucket, dim):
            raise ConfigError(
                f"input matrix shape {input_matrix.shape} does not match "
                f"{len(vocab.words)} words + bucket {feature.bucket}"
            )
        if output_matrix.shape != (len(vocab.labels), dim):
            raise ConfigError(
                f"output matrix shape {output_matrix.shape} does not match "
                f"{len(vocab.labels)} labels x dim {dim}"
            )
        if pooling not in ("mean", "sum"):
            raise ConfigError(f"unsupported pooling {pooling!r}")
        self.vocab = vocab
        self.input_matrix = np.ascontiguousarray(input_matrix, dtype=np.float32)
        self.output_matrix = np.ascontiguousarray(output_matrix, dtype=np.float32)
        self.feature = feature
        self.pooling = pooling
        self.dim = dim

    @property
    def labels(self) -> list[Label]:
        return self.vocab.labels

    def features(self, text: str) -> FeatureVector:
        return featurize(text, self.vocab, self.feature)

    def feature_ids(self, fv: FeatureVector) -> np.ndarray:
        """Matrix row indices for a feature vector (words, then offset n-grams)."""
        n_words = len(self.vocab.words)
        ids = fv.word_ids + [n_words + g for g in fv.ngram_ids]
        return np.asarray(ids, dtype=np.int32)

    def hidden(self, fv: FeatureVector) -> np.ndarray:
        """Pooled hidden vector (float32, zero when there are no features)."""
        return kernels.hidden_vector(
            self.input_matrix, self.feature_ids(fv), self.pooling == "mean"
        )

    def softmax_scores(self, text: str) -> np.ndarray:
        """Class probability vector (float64, sums to 1) for a text."""
        ids = self.feature_ids(self.features(text))
        return kernels.scores(self.input_matrix, self.output_matrix, ids, self.pooling == "mean")


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable softmax (max subtraction) in float64."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def softmax_scores(h: np.ndarray, model: Model) -> np.ndarray:
    """Class probabilities for a given hidden vector of length dim."""
    if len(h) != model.dim:
        raise ConfigError(f"hidden vector has length {len(h)}, expected {model.dim}")
    return softmax(model.output_matrix.astype(np.float64) @ np.asarray(h, dtype=np.float64))


def predict_topk(model: Model, text: str, k: int = 1) -> Prediction:
    """Top-k labels by softmax probability, ties broken by label index.

    Probabilities are reported from the full softmax. Empty text scores
    the zero hidden vector (a uniform distribution on an untrained output
    layer).
    """
    if k < 1:
        raise ConfigError("k must be >= 1")
    probs = model.softmax_scores(text)
    n = len(probs)
    order = np.lexsort((np.arange(n), -probs))[: min(k, n)]
    labels = model.vocab.labels
    return Prediction([(labels[i], float(probs[i])) for i in order])


def _featurize_corpus(
    examples: Sequence[LabeledText], vocab: Vocabulary, params: FeatureParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Featurize once up front into flat CSR-style id arrays."""
    n_words = len(vocab.words)
    ids_chunks: list[np.ndarray] = []
    offsets = np.zeros(len(examples) + 1, dtype=np.int64)
    y = np.empty(len(examples), dtype=np.int32)
    for i, ex in enumerate(examples):
        fv = featurize(ex.text, vocab, params)
        ids = fv.word_ids + [n_words + g for g in fv.ngram_ids]
        ids_chunks.append(np.asarray(ids, dtype=np.int32))
        offsets[i + 1] = offsets[i] + len(ids)
        (label,) = ex.labels
        y[i] = vocab.label_index[label]
    ids_flat = (
        np.concatenate(ids_chunks) if ids_chunks else np.empty(0, dtype=np.int32)
    )
    return ids_flat, offsets, y


def train(corpus: Iterable[LabeledText], params: TrainParams) -> Model:
    """Train a model with SGD over the (per-epoch shuffled) corpus.

    The input matrix is initialized uniformly in [-1/dim, 1/dim] from the
    seeded generator, the output matrix at zero. The learning rate decays
    linearly: lr_t = lr * (1 - t/T) with T = epochs * |corpus|. With
    threads=1 training is bit-reproducible for a fixed seed and backend;
    with more threads, workers update the shared matrices without locks
    and exact results vary run to run.
    """
    examples = list(corpus)
    if not examples:
        raise EmptyCorpusError("no training examples")
    vocab = build_vocab(examples, params.feature)
    if len(vocab.labels) < 2:
        raise SingleClassError("training requires at least two classes")

    dim = params.dim
    rng = np.random.default_rng(params.seed)
    n_rows = len(vocab.words) + params.feature.bucket
    input_matrix = rng.random((n_rows, dim), dtype=np.float32)
    input_matrix *= np.float32(2.0 / dim)
    input_matrix -= np.float32(1.0 / dim)
    output_matrix = np.zeros((len(vocab.labels), dim), dtype=np.float32)

    ids_flat, offsets, y = _featurize_corpus(examples, vocab, params.feature)
    n = len(examples)
    t_total = params.epochs * n
    mean = params.pooling == "mean"
    t = 0
    for _ in range(params.epochs):
        order = rng.permutation(n).astype(np.int64)
        if params.threads == 1:
            kernels.train_shard(
                input_matrix, output_matrix, ids_flat, offsets, y, order, params.lr, t, t_total, mean
            )
        else:
            shards = np.array_split(order, params.threads)
            with ThreadPoolExecutor(max_workers=params.threads) as pool:
                futures = []
                start = t
                for shard in shards:
                    futures.append(
                        pool.submit(
                            kernels.train_shard,
                            input_matrix,
                            output_matrix,
                            ids_flat,
                            offsets,
                            y,
                            shard,
                            params.lr,
                            start,
                            t_total,
                            mean,
                        )
                    )
                    start += len(shard)
                for f in futures:
                    f.result()
        t += n
    return Model(vocab, input_matrix, output_matrix, params.feature, params.pooling)


def reference_loss_and_grads(
    input_matrix: np.ndarray,
    output_matrix: np.ndarray,
    ids: np.ndarray,
    y: int,
    mean: bool = True,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Float64 shadow computation of the per-example loss and gradients.

    Returns (loss, d_loss/d_input, d_loss/d_output) with dense gradient
    arrays matching the matrix shapes. This is the analytic reference the
    finite-difference checks compare against, and the formula the training
    kernels implement.
    """
    inp = np.asarray(input_matrix, dtype=np.float64)
    out = np.asarray(output_matrix, dtype=np.float64)
    cnt = len(ids)
    if cnt == 0:
        h = np.zeros(inp.shape[1])
    else:
        h = inp[ids].sum(axis=0)
        if mean:
            h /= cnt
    p = softmax(out @ h)
    loss = -float(np.log(p[y]))
    g = p.copy()
    g[y] -= 1.0
    grad_out = np.outer(g, h)
    grad_in = np.zeros_like(inp)
    if cnt:
        gh = out.T @ g
        scale = 1.0 / cnt if mean else 1.0
        np.add.at(grad_in, np.asarray(ids), scale * gh)
    return loss, grad_in, grad_out
