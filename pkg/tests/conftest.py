from __future__ import annotations

import numpy as np
import pytest

from lidkit.corpus import LabeledText
from lidkit.features import FeatureParams
from lidkit.labels import parse_label
from lidkit.model import Model, TrainParams, Vocabulary, train

# Two easily separable pseudo-languages: disjoint alphabets.
_A_WORDS = ["aaa", "aab", "aba", "abb", "baa", "bab", "bba", "bbb"]
_B_WORDS = ["xxx", "xxy", "xyx", "xyy", "yxx", "yxy", "yyx", "yyy"]


def toy_corpus(n_per_class: int = 10, seed: int = 0) -> list[LabeledText]:
    rng = np.random.default_rng(seed)
    out = []
    for label_name, words in (("aaa_Latn", _A_WORDS), ("xxx_Latn", _B_WORDS)):
        label = parse_label(label_name)
        for _ in range(n_per_class):
            text = " ".join(words[int(i)] for i in rng.integers(len(words), size=5))
            out.append(LabeledText.single(label, text))
    return out


def toy_params(**overrides) -> TrainParams:
    defaults = dict(
        dim=4,
        lr=0.5,
        epochs=20,
        seed=1,
        feature=FeatureParams(minn=2, maxn=3, bucket=256, min_count=1),
    )
    defaults.update(overrides)
    return TrainParams(**defaults)


@pytest.fixture(scope="session")
def toy_model() -> Model:
    return train(toy_corpus(), toy_params())


def random_model(rng: np.random.Generator, n_labels: int | None = None) -> Model:
    """A structurally valid model with random parameters (not trained)."""
    dim = int(rng.integers(2, 9))
    bucket = int(rng.integers(16, 512))
    minn = int(rng.integers(1, 3))
    maxn = minn + int(rng.integers(0, 3))
    n_words = int(rng.integers(0, 20))
    n_labels = n_labels or int(rng.integers(2, 7))
    words = [(f"w{i}", int(rng.integers(1, 100))) for i in range(n_words)]
    pool = [
        "eng_Latn", "deu_Latn", "fra_Latn", "srp_Latn", "srp_Cyrl",
        "zxx_Zxxx", "fin_Latn", "ell_Grek",
    ]
    labels = [parse_label(s) for s in pool[:n_labels]]
    vocab = Vocabulary(words, labels)
    feature = FeatureParams(minn=minn, maxn=maxn, bucket=bucket, min_count=1)
    input_matrix = rng.normal(0, 0.3, (n_words + bucket, dim)).astype(np.float32)
    output_matrix = rng.normal(0, 0.3, (n_labels, dim)).astype(np.float32)
    return Model(vocab, input_matrix, output_matrix, feature)


def random_text(rng: np.random.Generator, max_tokens: int = 8) -> str:
    alphabet = "abcdefgxyzøß绝あц"
    n_tokens = int(rng.integers(0, max_tokens + 1))
    tokens = []
    for _ in range(n_tokens):
        length = int(rng.integers(1, 7))
        tokens.append("".join(alphabet[int(i)] for i in rng.integers(len(alphabet), size=length)))
    return " ".join(tokens)
