"""Binary model serialization.

Little-endian layout, no padding:

====================  =======================================
magic                 4 bytes ``OLID``
version               u32, currently 3
dim                   u32
minn, maxn            u32 each
word_ngrams           u32
bucket                u32
n_words, n_labels     u32 each
label table           n_labels x (u16 byte length, UTF-8 bytes)
word table            n_words x (u16 byte length, UTF-8 bytes, u64 count)
input matrix          (n_words + bucket) x dim float32, row-major
output matrix         n_labels x dim float32, row-major
====================  =======================================

A round trip reproduces predictions bit for bit.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO

import numpy as np

from .errors import FormatError, InvalidLabelError, ShapeMismatchError, TruncatedFileError
from .features import MAX_BUCKET, FeatureParams
from .labels import parse_label
from .model import Model, Vocabulary

MAGIC = b"OLID"
VERSION = 3

_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U64 = struct.Struct("<Q")


def _write_str(f: BinaryIO, s: str) -> None:
    data = s.encode("utf-8")
    if len(data) > 0xFFFF:
        raise FormatError(f"string too long for format ({len(data)} bytes)")
    f.write(_U16.pack(len(data)))
    f.write(data)


def save_model(model: Model, path: str | Path) -> None:
    """Write a model in the binary format above."""
    vocab = model.vocab
    with open(path, "wb") as f:
        f.write(MAGIC)
        for value in (
            VERSION,
            model.dim,
            model.feature.minn,
            model.feature.maxn,
            model.feature.word_ngrams,
            model.feature.bucket,
            len(vocab.words),
            len(vocab.labels),
        ):
            f.write(_U32.pack(value))
        for label in vocab.labels:
            _write_str(f, str(label))
        for word, count in zip(vocab.words, vocab.counts):
            _write_str(f, word)
            f.write(_U64.pack(count))
        f.write(np.ascontiguousarray(model.input_matrix, dtype="<f4").tobytes())
        f.write(np.ascontiguousarray(model.output_matrix, dtype="<f4").tobytes())


def _read_exact(f: BinaryIO, n: int, what: str) -> bytes:
    data = f.read(n)
    if len(data) != n:
        raise TruncatedFileError(f"file ends inside {what} ({len(data)}/{n} bytes)")
    return data


def _read_u32(f: BinaryIO, what: str) -> int:
    return _U32.unpack(_read_exact(f, 4, what))[0]


def load_model(path: str | Path) -> Model:
    """Read a model written by :func:`save_model`.

    Raises FormatError on a bad magic/version or undecodable field,
    TruncatedFileError when the file ends early, and ShapeMismatchError
    when the declared shapes are invalid or leave trailing bytes.
    """
    with open(path, "rb") as f:
        magic = _read_exact(f, 4, "magic")
        if magic != MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
        version = _read_u32(f, "version")
        if version != VERSION:
            raise FormatError(f"unsupported version {version}, expected {VERSION}")
        dim = _read_u32(f, "dim")
        minn = _read_u32(f, "minn")
        maxn = _read_u32(f, "maxn")
        word_ngrams = _read_u32(f, "word_ngrams")
        bucket = _read_u32(f, "bucket")
        n_words = _read_u32(f, "n_words")
        n_labels = _read_u32(f, "n_labels")
        if (
            dim < 1
            or not (1 <= bucket <= MAX_BUCKET)
            or minn > maxn
            or word_ngrams < 1
            or n_labels < 1
        ):
            raise ShapeMismatchError(
                f"invalid header: dim={dim} minn={minn} maxn={maxn} "
                f"word_ngrams={word_ngrams} bucket={bucket} n_labels={n_labels}"
            )
        labels = []
        for i in range(n_labels):
            ln = _U16.unpack(_read_exact(f, 2, "label table"))[0]
            raw = _read_exact(f, ln, "label table")
            try:
                labels.append(parse_label(raw.decode("utf-8")))
            except (UnicodeDecodeError, InvalidLabelError) as exc:
                raise FormatError(f"label {i} is not a valid label: {exc}") from exc
        words = []
        for i in range(n_words):
            ln = _U16.unpack(_read_exact(f, 2, "word table"))[0]
            raw = _read_exact(f, ln, "word table")
            try:
                token = raw.decode("utf-8")
            except UnicodeDecodeError as exc:
                raise FormatError(f"word {i} is not valid UTF-8") from exc
            count = _U64.unpack(_read_exact(f, 8, "word table"))[0]
            words.append((token, count))
        n_input = (n_words + bucket) * dim
        input_matrix = np.frombuffer(
            _read_exact(f, 4 * n_input, "input matrix"), dtype="<f4"
        ).reshape(n_words + bucket, dim)
        output_matrix = np.frombuffer(
            _read_exact(f, 4 * n_labels * dim, "output matrix"), dtype="<f4"
        ).reshape(n_labels, dim)
        if f.read(1):
            raise ShapeMismatchError("trailing bytes after declared matrices")
    feature = FeatureParams(minn=minn, maxn=maxn, word_ngrams=word_ngrams, bucket=bucket)
    vocab = Vocabulary(words, labels)
    return Model(vocab, input_matrix.copy(), output_matrix.copy(), feature)
