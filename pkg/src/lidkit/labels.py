"""Language labels, macrolanguage merge maps and cross-model alignment.

A class label is an ISO 639-3 language code plus an ISO 15924 script code
(``eng_Latn``, ``srp_Cyrl``). Two labels are special:

* ``zxx_Zxxx`` is the trainable not-a-language class (code, broken
  encoding and similar non-linguistic content);
* ``other`` is a decision-layer sentinel for rejected or out-of-inventory
  predictions. It is never a trainable class and sits outside the
  ``xxx_Yyyy`` grammar.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Mapping

from .errors import ConfigError, DuplicateLabelError, InvalidLabelError

_LABEL_RE = re.compile(r"^([a-z]{3})_([A-Z][a-z]{3})$")
_TRAIN_PREFIX = "__label__"


@dataclass(frozen=True, order=True)
class Label:
    """An immutable language label, ordered by its string form."""

    lang: str
    script: str

    def __str__(self) -> str:
        if self.is_other:
            return "other"
        return f"{self.lang}_{self.script}"

    def __repr__(self) -> str:
        return f"Label({str(self)!r})"

    @property
    def is_other(self) -> bool:
        return self.script == ""

    @property
    def is_noise(self) -> bool:
        return self.lang == "zxx" and self.script == "Zxxx"


#: Sentinel for rejected / out-of-inventory predictions.
OTHER = Label("other", "")

#: The not-a-language class.
ZXX = Label("zxx", "Zxxx")


def parse_label(s: str) -> Label:
    """Parse ``xxx_Yyyy``, ``__label__xxx_Yyyy`` or ``other``.

    Raises InvalidLabelError for anything else.
    """
    if s.startswith(_TRAIN_PREFIX):
        s = s[len(_TRAIN_PREFIX):]
    if s == "other":
        return OTHER
    m = _LABEL_RE.match(s)
    if m is None:
        raise InvalidLabelError(s)
    return Label(m.group(1), m.group(2))


class MergeMap:
    """Source -> canonical label mapping for macrolanguage merges.

    The map must be idempotent: a canonical target may never itself be a
    source, and entries may not form cycles.
    """

    def __init__(self, entries: Mapping[Label, Label]):
        for src, dst in entries.items():
            if src == dst:
                raise ConfigError(f"merge map maps {src} to itself")
            if dst in entries:
                raise ConfigError(
                    f"merge target {dst} is itself merged away; map is not idempotent"
                )
        self.entries = dict(entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __call__(self, label: Label) -> Label:
        return canonicalize(label, self)

    @classmethod
    def identity(cls) -> "MergeMap":
        return cls({})

    @classmethod
    def from_tsv(cls, path: str | Path) -> "MergeMap":
        entries = {}
        for fields in _read_tsv_rows(path, n_cols=2):
            src, dst = parse_label(fields[0]), parse_label(fields[1])
            entries[src] = dst
        return cls(entries)


def canonicalize(label: Label, merge_map: MergeMap) -> Label:
    """Map a label to its canonical (macrolanguage) form.

    Unmapped labels pass through unchanged; applying the map twice is the
    same as applying it once.
    """
    return merge_map.entries.get(label, label)


@dataclass
class InventoryReport:
    count: int
    has_noise_class: bool
    labels: list[Label]


def validate_inventory(labels: Iterable[Label]) -> InventoryReport:
    """Check an inventory for grammar violations and duplicates.

    Returns a report with the class count and whether the not-a-language
    class is present. An empty inventory is valid with count 0.
    """
    seen: list[Label] = []
    seen_set: set[Label] = set()
    for label in labels:
        if label.is_other:
            raise InvalidLabelError("other", "sentinel is not a trainable class")
        if not _LABEL_RE.match(str(label)):
            raise InvalidLabelError(str(label))
        if label in seen_set:
            raise DuplicateLabelError(f"duplicate label {label}")
        seen.append(label)
        seen_set.add(label)
    return InventoryReport(
        count=len(seen),
        has_noise_class=ZXX in seen_set,
        labels=seen,
    )


class AlignmentMap:
    """Total mapping from a foreign model's labels into this inventory.

    Resolution order: an explicit entry wins; otherwise the merge map is
    applied and the result kept if it belongs to the target inventory;
    anything else maps to ``other``.
    """

    def __init__(
        self,
        inventory: Iterable[Label],
        entries: Mapping[Label, Label] | None = None,
        merge_map: MergeMap | None = None,
    ):
        self.inventory = frozenset(inventory)
        self.entries = dict(entries or {})
        self.merge_map = merge_map or MergeMap.identity()

    def __call__(self, foreign: Label) -> Label:
        return align(foreign, self)

    @classmethod
    def from_tsv(
        cls,
        path: str | Path,
        inventory: Iterable[Label],
        merge_map: MergeMap | None = None,
    ) -> "AlignmentMap":
        entries = {}
        for fields in _read_tsv_rows(path, n_cols=2):
            entries[parse_label(fields[0])] = parse_label(fields[1])
        return cls(inventory, entries, merge_map)


def align(foreign: Label, alignment: AlignmentMap) -> Label:
    """Resolve a foreign-inventory label to this inventory or ``other``."""
    if foreign in alignment.entries:
        return alignment.entries[foreign]
    merged = canonicalize(foreign, alignment.merge_map)
    if merged in alignment.inventory:
        return merged
    return OTHER


def _read_tsv_rows(path: str | Path, n_cols: int) -> Iterator[list[str]]:
    """Yield stripped rows from a TSV file, skipping blanks and # comments."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) < n_cols:
                raise ConfigError(f"{path}:{line_no}: expected {n_cols} columns")
            yield fields


def _data_path(name: str) -> Path:
    return Path(str(resources.files("lidkit").joinpath("data", name)))


def load_default_inventory() -> list[Label]:
    """The shipped v3 inventory (194 languages plus zxx_Zxxx)."""
    return [parse_label(row[0]) for row in _read_tsv_rows(_data_path("openlid_v3_labels.tsv"), 1)]


def load_default_merge_map() -> MergeMap:
    """The shipped v3 macrolanguage merge map."""
    return MergeMap.from_tsv(_data_path("merge_map_v3.tsv"))
