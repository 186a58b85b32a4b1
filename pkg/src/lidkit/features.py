"""Deterministic text featurization: tokens, character n-grams and the
hashing trick.

Raw text becomes a multiset of integer feature ids: indices into the word
vocabulary for in-vocabulary tokens, plus bucket indices for hashed
character n-grams (and word n-grams of order >= 2, which share the same
bucket space). No case folding or Unicode normalization is applied by
default because script and casing carry language signal; NFC can be
opted into via ``FeatureParams.normalize``.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass
from typing import TYPE_CHECKING

from . import kernels
from .errors import ConfigError

if TYPE_CHECKING:
    from .model import Vocabulary

# Cc control characters minus tab and newline; stripped before tokenizing.
_CONTROL_TABLE = {
    cp: None
    for cp in list(range(0x20)) + [0x7F] + list(range(0x80, 0xA0))
    if chr(cp) not in "\t\n"
}

#: Hash-space ceiling keeping word + bucket row indices inside int32.
MAX_BUCKET = 2**30


@dataclass(frozen=True)
class FeatureParams:
    """Featurization hyperparameters.

    ``normalize`` is a runtime preprocessing option ("nfc" or None); it is
    not persisted in model files, so the same setting must be used at
    training and inference time.
    """

    minn: int = 2
    maxn: int = 5
    word_ngrams: int = 1
    bucket: int = 2**21
    min_count: int = 5
    normalize: str | None = None

    def __post_init__(self) -> None:
        if not (0 <= self.minn <= self.maxn):
            raise ConfigError(f"need 0 <= minn <= maxn, got {self.minn}..{self.maxn}")
        if not (1 <= self.bucket <= MAX_BUCKET):
            raise ConfigError(f"bucket must be in [1, {MAX_BUCKET}], got {self.bucket}")
        if self.word_ngrams < 1:
            raise ConfigError("word_ngrams must be >= 1")
        if self.min_count < 1:
            raise ConfigError("min_count must be >= 1")
        if self.normalize not in (None, "nfc"):
            raise ConfigError(f"unsupported normalize mode {self.normalize!r}")


@dataclass
class FeatureVector:
    """Feature ids for one text: vocabulary word ids, hashed n-gram ids
    (indices into the bucket region) and the source token count.
    Duplicates are retained; these are multisets."""

    word_ids: list[int]
    ngram_ids: list[int]
    token_count: int

    def __len__(self) -> int:
        return len(self.word_ids) + len(self.ngram_ids)


def clean_text(text: str, normalize: str | None = None) -> str:
    """Strip control characters (except tab/newline) and optionally apply NFC."""
    text = text.translate(_CONTROL_TABLE)
    if normalize == "nfc":
        text = unicodedata.normalize("NFC", text)
    return text


def tokenize(text: str) -> list[str]:
    """Split into maximal runs of non-whitespace.

    Any Unicode whitespace separates tokens; empty input gives an empty
    list and no empty tokens are produced.
    """
    return text.split()


def char_ngrams(token: str, minn: int, maxn: int) -> list[str]:
    """All n-grams of the boundary-wrapped token with length in [minn, maxn].

    The token is wrapped in "<" and ">" markers first; n-grams are
    substrings of code points, returned shortest length first and left to
    right within each length. maxn = 0 disables n-grams entirely.
    """
    if maxn <= 0:
        return []
    wrapped = "<" + token + ">"
    k = len(wrapped)
    out: list[str] = []
    for n in range(max(minn, 1), maxn + 1):
        if n > k:
            break
        for i in range(k - n + 1):
            out.append(wrapped[i : i + n])
    return out


def hash_feature(s: str) -> int:
    """FNV-1a 32-bit hash of the UTF-8 encoding of ``s``."""
    return kernels.fnv1a(s.encode("utf-8"))


def featurize(text: str, vocab: "Vocabulary", params: FeatureParams) -> FeatureVector:
    """Convert text into feature ids under a fixed vocabulary.

    In-vocabulary tokens contribute their word id; every token (known or
    not) contributes its hashed character n-grams; word n-grams of order
    2..word_ngrams over the token sequence are hashed into the same bucket
    space (n-gram tokens joined with a single space). Pure and
    deterministic for fixed vocab/params.
    """
    tokens = tokenize(clean_text(text, params.normalize))
    word_ids: list[int] = []
    ngram_ids: list[int] = []
    word_index = vocab.word_index
    for tok in tokens:
        idx = word_index.get(tok)
        if idx is not None:
            word_ids.append(idx)
        ngram_ids.extend(kernels.token_ngram_hashes(tok, params.minn, params.maxn, params.bucket))
    for n in range(2, params.word_ngrams + 1):
        for i in range(len(tokens) - n + 1):
            ngram_ids.append(hash_feature(" ".join(tokens[i : i + n])) % params.bucket)
    return FeatureVector(word_ids, ngram_ids, len(tokens))
