"""Post-classification decision policies.

Three mechanisms turn raw softmax rankings into final labels:

* softmax thresholding: keep the top-1 label only when its probability
  reaches tau, otherwise emit ``other``;
* two-model agreement ensembling, by top-1 label equality or by top-3
  candidate-set intersection;
* hierarchical cascading: when the base model predicts a member of a
  configured language group, a group-specialist model re-predicts and its
  answer replaces the base prediction.
"""

from __future__ import annotations

import threading
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError, DataError, SpecialistMissingError
from .labels import OTHER, Label, parse_label
from .model import Model, Prediction, predict_topk
from .modelio import load_model


@dataclass(frozen=True)
class ThresholdPolicy:
    """Softmax threshold tau in [0, 1]. A score exactly at tau passes."""

    tau: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 <= self.tau <= 1.0):
            raise ConfigError(f"tau must be in [0, 1], got {self.tau}")


def apply_threshold(pred: Prediction, policy: ThresholdPolicy) -> Label:
    """Top-1 label if its probability is >= tau, else ``other``."""
    if not pred.ranked:
        raise ConfigError("cannot threshold an empty prediction")
    label, prob = pred.ranked[0]
    return label if prob >= policy.tau else OTHER


def ensemble_top1(a: Label, b: Label) -> Label:
    """Agreement vote: the shared label when both sides agree, else ``other``.

    Inputs are assumed already thresholded and aligned to the shared
    canonical inventory.
    """
    return a if a == b else OTHER


def ensemble_top3(
    a: Prediction | Sequence[tuple[Label, float]],
    b: Prediction | Sequence[tuple[Label, float]],
    label_order: Mapping[Label, int] | None = None,
) -> Label:
    """Top-3 agreement: intersect the two candidate sets.

    An empty intersection yields ``other``; otherwise the candidate with
    the highest mean of its two probabilities wins, ties broken by
    ascending label index (lexicographic label order when no explicit
    index is given). ``other`` entries are never agreement candidates.
    """
    pa = _first_wins(_pairs(a)[:3])
    pb = _first_wins(_pairs(b)[:3])
    common = [lab for lab in pa if lab in pb and lab != OTHER]
    if not common:
        return OTHER

    def tie_key(lab: Label):
        return label_order[lab] if label_order is not None else str(lab)

    common.sort(key=lambda lab: (-(pa[lab] + pb[lab]) / 2.0, tie_key(lab)))
    return common[0]


def _pairs(pred: Prediction | Sequence[tuple[Label, float]]) -> list[tuple[Label, float]]:
    return list(pred.ranked if isinstance(pred, Prediction) else pred)


def _first_wins(pairs: Sequence[tuple[Label, float]]) -> dict[Label, float]:
    """Pairs as a dict; on duplicate labels the higher-ranked entry wins."""
    out: dict[Label, float] = {}
    for label, prob in pairs:
        out.setdefault(label, prob)
    return out


@dataclass(frozen=True)
class CascadeGroup:
    name: str
    members: frozenset[Label]
    model_path: str


class CascadeConfig:
    """Routing table: disjoint language groups, each owning a specialist
    model path."""

    def __init__(self, groups: Sequence[CascadeGroup]):
        seen: dict[Label, str] = {}
        for group in groups:
            if not group.members:
                raise ConfigError(f"group {group.name!r} has no members")
            for member in group.members:
                if member in seen:
                    raise ConfigError(
                        f"label {member} is in groups {seen[member]!r} and {group.name!r}"
                    )
                seen[member] = group.name
        self.groups = list(groups)
        self._owner = {m: g for g in groups for m in g.members}

    def owner(self, label: Label) -> CascadeGroup | None:
        return self._owner.get(label)

    def validate_members(self, inventory: Sequence[Label]) -> None:
        """Check that every member is a class of the base model."""
        known = set(inventory)
        for group in self.groups:
            missing = sorted(str(m) for m in group.members - known)
            if missing:
                raise ConfigError(
                    f"group {group.name!r} members not in base inventory: {', '.join(missing)}"
                )

    @classmethod
    def from_tsv(cls, path: str | Path) -> "CascadeConfig":
        """Load from a ``group<TAB>member_label<TAB>model_path`` TSV.

        The model path is repeated on every member row and must agree
        within a group.
        """
        members: dict[str, set[Label]] = {}
        paths: dict[str, str] = {}
        order: list[str] = []
        with open(path, encoding="utf-8") as f:
            for line_no, line in enumerate(f, 1):
                line = line.rstrip("\n")
                if not line.strip() or line.lstrip().startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) != 3:
                    raise ConfigError(f"{path}:{line_no}: expected 3 columns")
                name, member, model_path = fields
                if name not in members:
                    members[name] = set()
                    paths[name] = model_path
                    order.append(name)
                elif paths[name] != model_path:
                    raise ConfigError(
                        f"{path}:{line_no}: group {name!r} has conflicting model paths"
                    )
                members[name].add(parse_label(member))
        return cls([CascadeGroup(n, frozenset(members[n]), paths[n]) for n in order])


class SpecialistPool:
    """Lazily loads and caches specialist models, one per group.

    Loading is synchronized so concurrent callers trigger at most one
    load per group; a specialist's classes must be a subset of its
    group's members.
    """

    def __init__(self, loader=load_model):
        self._loader = loader
        self._models: dict[str, Model] = {}
        self._lock = threading.Lock()

    def get(self, group: CascadeGroup) -> Model:
        with self._lock:
            model = self._models.get(group.name)
            if model is None:
                try:
                    model = self._loader(group.model_path)
                except (OSError, DataError) as exc:
                    raise SpecialistMissingError(
                        f"cannot load specialist for group {group.name!r} "
                        f"from {group.model_path}: {exc}"
                    ) from exc
                extra = set(model.vocab.labels) - group.members
                if extra:
                    raise ConfigError(
                        f"specialist for {group.name!r} predicts labels outside the "
                        f"group: {', '.join(sorted(str(x) for x in extra))}"
                    )
                self._models[group.name] = model
            return model


def cascade_predict_detail(
    base: Model,
    cfg: CascadeConfig,
    specialists: SpecialistPool,
    text: str,
    policy: ThresholdPolicy,
) -> tuple[Label, float, str]:
    """Cascade decision plus the deciding model's top-1 probability and
    the stage name ("base" or the group name)."""
    pred = predict_topk(base, text, 1)
    label = apply_threshold(pred, policy)
    group = None if label == OTHER else cfg.owner(label)
    if group is None:
        return label, pred.ranked[0][1], "base"
    spec_pred = predict_topk(specialists.get(group), text, 1)
    return apply_threshold(spec_pred, policy), spec_pred.ranked[0][1], group.name


def cascade_predict(
    base: Model,
    cfg: CascadeConfig,
    specialists: SpecialistPool,
    text: str,
    policy: ThresholdPolicy,
) -> Label:
    """Base prediction, replaced by the owning group's specialist whenever
    the (thresholded) base label falls inside a configured group.

    Labels outside every group pass through unchanged; a rejected base
    prediction (``other``) short-circuits routing.
    """
    return cascade_predict_detail(base, cfg, specialists, text, policy)[0]
