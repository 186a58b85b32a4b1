"""Corpus ingestion and generation.

Covers the line-oriented training format (``__label__xxx_Yyyy text``),
multilabel gold TSVs, synthetic not-a-language generation from per-script
code-point ranges, and train/test deduplication (exact and near-duplicate
via character shingles).
"""

from __future__ import annotations

import unicodedata
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .errors import (
    EmptyGoldSetError,
    InvalidLabelError,
    InvalidRangeError,
    MalformedLineError,
)
from .labels import ZXX, Label, parse_label

_LABEL_PREFIX = "__label__"


@dataclass(frozen=True)
class LabeledText:
    """One example: a non-empty label set (singleton for training data)
    and a single line of text."""

    labels: frozenset[Label]
    text: str

    @classmethod
    def single(cls, label: Label, text: str) -> "LabeledText":
        return cls(frozenset([label]), text)


def parse_fasttext_line(line: str) -> LabeledText:
    """Parse one ``__label__a (__label__b ...) text`` line.

    Raises InvalidLabelError when there is no leading label or a label
    token is malformed.
    """
    rest = line.rstrip("\n")
    labels: set[Label] = set()
    while rest.startswith(_LABEL_PREFIX):
        parts = rest.split(maxsplit=1)
        labels.add(parse_label(parts[0]))
        rest = parts[1] if len(parts) > 1 else ""
    if not labels:
        raise InvalidLabelError(rest[:40], "line has no leading __label__ token")
    return LabeledText(frozenset(labels), rest)


def format_fasttext_line(item: LabeledText) -> str:
    if "\n" in item.text:
        raise ValueError("example text contains a newline; the line format is single-line")
    first = item.text.split(maxsplit=1)
    if first and first[0].startswith(_LABEL_PREFIX):
        raise ValueError(
            "example text begins with a __label__ token and would not survive a round trip"
        )
    labels = " ".join(_LABEL_PREFIX + str(lab) for lab in sorted(item.labels))
    return f"{labels} {item.text}"


def read_fasttext(
    path: str | Path,
    strict: bool = False,
    errors: list[MalformedLineError] | None = None,
) -> Iterator[LabeledText]:
    """Stream labeled examples from a file in the line format above.

    Malformed lines are collected into ``errors`` (when given) and skipped
    unless ``strict`` is set, in which case the first one raises.
    """
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            try:
                yield parse_fasttext_line(line)
            except InvalidLabelError as exc:
                err = MalformedLineError(str(path), line_no, str(exc))
                if strict:
                    raise err from exc
                if errors is not None:
                    errors.append(err)


def write_fasttext(items: Iterable[LabeledText], path: str | Path) -> int:
    """Write examples in the line format; returns the number of lines."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for item in items:
            f.write(format_fasttext_line(item) + "\n")
            n += 1
    return n


def read_multilabel_tsv(path: str | Path) -> Iterator[LabeledText]:
    """Stream multilabel gold examples from a ``labels<TAB>text`` TSV.

    Labels are comma-separated; duplicates within a cell collapse to a
    set. An empty label cell is fatal (gold rows must stay aligned with
    prediction rows, so nothing may be skipped).
    """
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if "\t" not in line:
                raise MalformedLineError(str(path), line_no, "expected labels<TAB>text")
            cell, text = line.split("\t", 1)
            names = [s.strip() for s in cell.split(",") if s.strip()]
            if not names:
                raise EmptyGoldSetError(f"{path}:{line_no}: empty gold label set")
            yield LabeledText(frozenset(parse_label(s) for s in names), text)


# ---------------------------------------------------------------------------
# Synthetic not-a-language data


def load_script_ranges(path: str | Path | None = None) -> dict[str, list[tuple[int, int]]]:
    """Load the script -> code-point-ranges table (shipped file by default).

    Format: ``script<TAB>hexlo-hexhi(,hexlo-hexhi)*`` with # comments.
    """
    if path is None:
        path = Path(str(resources.files("lidkit").joinpath("data", "script_ranges.tsv")))
    table: dict[str, list[tuple[int, int]]] = {}
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                name, spec = line.split("\t")
                ranges = []
                for part in spec.split(","):
                    lo_s, hi_s = part.split("-")
                    ranges.append((int(lo_s, 16), int(hi_s, 16)))
            except ValueError as exc:
                raise InvalidRangeError(f"{path}:{line_no}: bad range line") from exc
            table[name] = ranges
    return table


def _assigned_code_points(ranges: list[tuple[int, int]]) -> np.ndarray:
    """Expand ranges to the assigned, non-surrogate code points they contain."""
    points: list[int] = []
    for lo, hi in ranges:
        if not (0 <= lo <= hi <= 0x10FFFF):
            raise InvalidRangeError(f"invalid code-point range {lo:#x}-{hi:#x}")
        for cp in range(lo, hi + 1):
            if 0xD800 <= cp <= 0xDFFF:
                continue
            if unicodedata.category(chr(cp)) == "Cn":
                continue
            points.append(cp)
    return np.asarray(points, dtype=np.int64)


@dataclass
class NoiseSpec:
    """Parameters for synthetic noise: which scripts to draw from, how
    many examples, the length range in code points, and the seed."""

    scripts: list[str]
    n: int
    len_min: int = 20
    len_max: int = 80
    seed: int = 0
    ranges: dict[str, list[tuple[int, int]]] | None = None

    def __post_init__(self) -> None:
        if self.n < 0:
            raise InvalidRangeError("n must be >= 0")
        if not (1 <= self.len_min <= self.len_max):
            raise InvalidRangeError("need 1 <= len_min <= len_max")
        if not self.scripts:
            raise InvalidRangeError("at least one script required")
        table = self.ranges if self.ranges is not None else load_script_ranges()
        self._alphabets: list[tuple[str, np.ndarray]] = []
        for name in self.scripts:
            if name not in table:
                raise InvalidRangeError(f"unknown script {name!r}")
            points = _assigned_code_points(table[name])
            if len(points) == 0:
                raise InvalidRangeError(f"script {name!r} has no assigned code points")
            self._alphabets.append((name, points))


def gen_noise(spec: NoiseSpec) -> list[LabeledText]:
    """Generate not-a-language examples, all labeled zxx_Zxxx.

    Each example picks a script uniformly, a length uniformly in
    [len_min, len_max], then independent uniform code points from the
    script's assigned, non-surrogate set. Fully deterministic for a fixed
    seed.
    """
    rng = np.random.default_rng(spec.seed)
    out: list[LabeledText] = []
    for _ in range(spec.n):
        _, alphabet = spec._alphabets[int(rng.integers(len(spec._alphabets)))]
        length = int(rng.integers(spec.len_min, spec.len_max + 1))
        cps = alphabet[rng.integers(len(alphabet), size=length)]
        out.append(LabeledText.single(ZXX, "".join(chr(int(cp)) for cp in cps)))
    return out


# ---------------------------------------------------------------------------
# Deduplication

_SHINGLE_SIZE = 5
_SHINGLE_JACCARD = 0.8


def normalize_for_dedup(text: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces."""
    return " ".join(text.split())


def _shingles(s: str, k: int = _SHINGLE_SIZE) -> set[str]:
    if len(s) < k:
        return {s} if s else set()
    return {s[i : i + k] for i in range(len(s) - k + 1)}


@dataclass
class RemovedItem:
    """A test example dropped by dedup, with the train-side evidence."""

    item: LabeledText
    test_line_no: int
    train_line_no: int
    train_text: str
    kind: str  # "exact" or "shingle"
    similarity: float


def dedup(
    test: Iterable[LabeledText],
    train: Iterable[LabeledText],
    mode: str = "exact",
    shingle_threshold: float = _SHINGLE_JACCARD,
) -> tuple[list[LabeledText], list[RemovedItem]]:
    """Drop test examples that also occur in the training stream.

    "exact" matches whitespace-normalized text; "shingle" additionally
    drops test lines whose character 5-gram Jaccard similarity with any
    train line exceeds the threshold (candidates found via an inverted
    index). Returns (kept, removed); removed items carry the matching
    train line number and text.
    """
    if mode not in ("exact", "shingle"):
        raise ValueError(f"unknown dedup mode {mode!r}")
    exact: dict[str, tuple[int, str]] = {}
    shingle_sets: list[set[str]] = []
    shingle_index: dict[str, list[int]] = {}
    train_rows: list[tuple[int, str]] = []
    for line_no, item in enumerate(train, 1):
        norm = normalize_for_dedup(item.text)
        if norm not in exact:
            exact[norm] = (line_no, item.text)
        if mode == "shingle":
            sh = _shingles(norm)
            idx = len(shingle_sets)
            shingle_sets.append(sh)
            train_rows.append((line_no, item.text))
            for s in sh:
                shingle_index.setdefault(s, []).append(idx)

    kept: list[LabeledText] = []
    removed: list[RemovedItem] = []
    for test_no, item in enumerate(test, 1):
        norm = normalize_for_dedup(item.text)
        hit = exact.get(norm)
        if hit is not None:
            removed.append(RemovedItem(item, test_no, hit[0], hit[1], "exact", 1.0))
            continue
        if mode == "shingle":
            sh = _shingles(norm)
            shared = Counter()
            for s in sh:
                for idx in shingle_index.get(s, ()):
                    shared[idx] += 1
            best: tuple[float, int] | None = None
            for idx, inter in shared.items():
                union = len(sh) + len(shingle_sets[idx]) - inter
                jac = inter / union if union else 0.0
                if best is None or jac > best[0]:
                    best = (jac, idx)
            if best is not None and best[0] > shingle_threshold:
                line_no, text = train_rows[best[1]]
                removed.append(RemovedItem(item, test_no, line_no, text, "shingle", best[0]))
                continue
        kept.append(item)
    return kept, removed
