"""Evaluation metrics.

Per-class false positive rate, precision, recall and F1 from a confusion
matrix; unweighted macro averages; multilabel loose/exact accuracies and
per-class loose F1; and trash-bin diagnostics (classes that soak up
noise and out-of-inventory text).

All 0/0 ratios resolve to 0, so a class that is never predicted and never
missed reports zeros rather than NaNs. FPR and recall have denominators
fixed by the gold distribution, which is what makes them robust to class
imbalance (precision is not).
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from .errors import (
    EmptyGoldSetError,
    LengthMismatchError,
    NoClassesError,
    UnknownClassError,
)
from .labels import OTHER, ZXX, Label


def _ratio(num: int | float, den: int | float) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class ClassMetrics:
    tp: int
    fp: int
    fn: int
    tn: int
    fpr: float
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int, tn: int) -> "ClassMetrics":
        precision = _ratio(tp, tp + fp)
        recall = _ratio(tp, tp + fn)
        return cls(
            tp=tp,
            fp=fp,
            fn=fn,
            tn=tn,
            fpr=_ratio(fp, fp + tn),
            precision=precision,
            recall=recall,
            f1=_ratio(2 * precision * recall, precision + recall),
        )


@dataclass(frozen=True)
class MacroMetrics:
    fpr: float
    precision: float
    recall: float
    f1: float


class ConfusionMatrix:
    """Gold x predicted cross-tabulation.

    The class index is the sorted union of observed labels plus ``other``;
    counts[g][p] is the number of examples with gold g predicted p.
    """

    def __init__(self, class_index: Sequence[Label], counts: np.ndarray):
        self.class_index = list(class_index)
        self.index = {lab: i for i, lab in enumerate(self.class_index)}
        self.counts = np.asarray(counts, dtype=np.int64)
        if self.counts.shape != (len(self.class_index), len(self.class_index)):
            raise LengthMismatchError("counts shape does not match class index")
        self.n_total = int(self.counts.sum())

    def count(self, gold: Label, pred: Label) -> int:
        return int(self.counts[self.index[gold], self.index[pred]])

    def observed_classes(self) -> list[Label]:
        """Classes with at least one gold or predicted example."""
        touched = (self.counts.sum(axis=1) + self.counts.sum(axis=0)) > 0
        return [lab for lab, t in zip(self.class_index, touched) if t]

    def merged(self, other: "ConfusionMatrix") -> "ConfusionMatrix":
        """Elementwise sum under the union class index (associative)."""
        union = sorted(set(self.class_index) | set(other.class_index), key=str)
        counts = np.zeros((len(union), len(union)), dtype=np.int64)
        pos = {lab: i for i, lab in enumerate(union)}
        for cm in (self, other):
            idx = np.asarray([pos[lab] for lab in cm.class_index], dtype=np.int64)
            counts[np.ix_(idx, idx)] += cm.counts
        return ConfusionMatrix(union, counts)


def confusion(golds: Sequence[Label], preds: Sequence[Label]) -> ConfusionMatrix:
    """Cross-tabulate gold and predicted labels (equal-length lists)."""
    if len(golds) != len(preds):
        raise LengthMismatchError(f"{len(golds)} gold labels vs {len(preds)} predictions")
    classes = sorted(set(golds) | set(preds) | {OTHER}, key=str)
    pos = {lab: i for i, lab in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for g, p in zip(golds, preds):
        counts[pos[g], pos[p]] += 1
    return ConfusionMatrix(classes, counts)


def per_class_metrics(cm: ConfusionMatrix, c: Label) -> ClassMetrics:
    """One-vs-rest counts and ratios for class ``c``."""
    if c not in cm.index:
        raise UnknownClassError(f"class {c} not in confusion matrix")
    i = cm.index[c]
    tp = int(cm.counts[i, i])
    fp = int(cm.counts[:, i].sum()) - tp
    fn = int(cm.counts[i, :].sum()) - tp
    tn = cm.n_total - tp - fp - fn
    return ClassMetrics.from_counts(tp, fp, fn, tn)


def macro_average(per_class: Mapping[Label, ClassMetrics]) -> MacroMetrics:
    """Unweighted mean of the ratio metrics over the given classes."""
    if not per_class:
        raise NoClassesError("cannot macro-average zero classes")
    n = len(per_class)
    return MacroMetrics(
        fpr=sum(m.fpr for m in per_class.values()) / n,
        precision=sum(m.precision for m in per_class.values()) / n,
        recall=sum(m.recall for m in per_class.values()) / n,
        f1=sum(m.f1 for m in per_class.values()) / n,
    )


@dataclass(frozen=True)
class MultilabelMetrics:
    """Loose (prediction is a member of the gold set) and exact (singleton
    gold set matched) accuracies, plus per-class loose F1."""

    loose_acc: float
    exact_acc: float
    per_class_loose_f1: dict[Label, float]


def multilabel_metrics(
    golds: Sequence[Iterable[Label]], preds: Sequence[Label]
) -> MultilabelMetrics:
    """Score single predictions against multilabel gold sets.

    Loose-correct means the predicted label belongs to the gold set;
    exact-correct means the gold set is exactly the predicted singleton.
    Per-class loose F1 counts, for class c: TP when c is predicted and in
    the gold set; FP when c is predicted but not in the gold set; FN when
    c is in the gold set but the prediction hit no gold label at all (a
    multilabel example whose prediction matches *some* gold label is not
    counted as a miss for its other gold labels).
    """
    if len(golds) != len(preds):
        raise LengthMismatchError(f"{len(golds)} gold sets vs {len(preds)} predictions")
    gold_sets = [frozenset(g) for g in golds]
    for i, gs in enumerate(gold_sets):
        if not gs:
            raise EmptyGoldSetError(f"gold set {i} is empty")
    n = len(gold_sets)
    loose = exact = 0
    classes = sorted(set().union(*gold_sets, set(preds)) if gold_sets else set(), key=str)
    tp = {c: 0 for c in classes}
    fp = {c: 0 for c in classes}
    fn = {c: 0 for c in classes}
    for gs, p in zip(gold_sets, preds):
        hit = p in gs
        if hit:
            loose += 1
            if gs == {p}:
                exact += 1
            tp[p] += 1
        else:
            fp[p] += 1
            for c in gs:
                fn[c] += 1
    f1s = {}
    for c in classes:
        precision = _ratio(tp[c], tp[c] + fp[c])
        recall = _ratio(tp[c], tp[c] + fn[c])
        f1s[c] = _ratio(2 * precision * recall, precision + recall)
    return MultilabelMetrics(
        loose_acc=_ratio(loose, n), exact_acc=_ratio(exact, n), per_class_loose_f1=f1s
    )


def trash_bin_report(cm: ConfusionMatrix, threshold: float = 0.5) -> list[tuple[Label, float]]:
    """Predicted language classes whose share of noise/out-of-inventory
    gold (``other`` or ``zxx_Zxxx``) among their predictions reaches the
    threshold, sorted by share descending.

    The ``other`` and ``zxx_Zxxx`` columns themselves are not candidates:
    attracting noise is their job, not a symptom."""
    if not (0.0 <= threshold <= 1.0):
        raise ValueError("threshold must be in [0, 1]")
    foreign_rows = [
        cm.index[lab] for lab in (OTHER, ZXX) if lab in cm.index
    ]
    out = []
    col_totals = cm.counts.sum(axis=0)
    for j, lab in enumerate(cm.class_index):
        if lab in (OTHER, ZXX):
            continue
        total = int(col_totals[j])
        if total == 0:
            continue
        foreign = int(cm.counts[foreign_rows, j].sum()) if foreign_rows else 0
        share = foreign / total
        # zero foreign share is never a bin, whatever the threshold
        if share > 0 and share >= threshold:
            out.append((lab, share))
    out.sort(key=lambda item: (-item[1], str(item[0])))
    return out


@dataclass
class MetricsReport:
    """Everything one evaluation run produces. ``multilabel`` is None for
    single-label gold; ``per_class``/``macro`` are empty/None for
    multilabel gold, where one-vs-rest counts are not defined."""

    per_class: dict[Label, ClassMetrics]
    macro: MacroMetrics | None
    multilabel: MultilabelMetrics | None
    trash_bins: list[tuple[Label, float]]


def report_single(
    golds: Sequence[Label], preds: Sequence[Label], trash_threshold: float = 0.5
) -> MetricsReport:
    """Full single-label report: per-class metrics for every class with at
    least one gold or predicted example, their macro average, and the
    trash-bin diagnostic."""
    cm = confusion(golds, preds)
    per_class = {c: per_class_metrics(cm, c) for c in cm.observed_classes()}
    macro = macro_average(per_class) if per_class else None
    return MetricsReport(
        per_class=per_class,
        macro=macro,
        multilabel=None,
        trash_bins=trash_bin_report(cm, trash_threshold),
    )


def report_multilabel(
    golds: Sequence[Iterable[Label]], preds: Sequence[Label]
) -> MetricsReport:
    """Multilabel report: loose/exact accuracies and per-class loose F1."""
    return MetricsReport(
        per_class={},
        macro=None,
        multilabel=multilabel_metrics(golds, preds),
        trash_bins=[],
    )


# ---------------------------------------------------------------------------
# Rendering

_FORMATS = ("json", "tsv", "markdown")


def _f(x: float) -> str:
    return f"{x:.6f}"


def _json_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def render_report(report: MetricsReport, fmt: str = "json") -> str:
    """Serialize a report; json is the canonical machine format with a
    stable key order and fixed 6-decimal floats, so equal reports render
    byte-identically."""
    if fmt == "json":
        return _render_json(report)
    if fmt == "tsv":
        return _render_tsv(report)
    if fmt == "markdown":
        return _render_markdown(report)
    raise ValueError(f"unknown report format {fmt!r}; expected one of {_FORMATS}")


def _render_json(report: MetricsReport) -> str:
    lines = ["{"]
    per_class_items = []
    for lab in sorted(report.per_class, key=str):
        m = report.per_class[lab]
        per_class_items.append(
            f'    {_json_str(str(lab))}: {{"tp": {m.tp}, "fp": {m.fp}, "fn": {m.fn}, '
            f'"tn": {m.tn}, "fpr": {_f(m.fpr)}, "precision": {_f(m.precision)}, '
            f'"recall": {_f(m.recall)}, "f1": {_f(m.f1)}}}'
        )
    if per_class_items:
        lines.append('  "per_class": {')
        lines.append(",\n".join(per_class_items))
        lines.append("  },")
    else:
        lines.append('  "per_class": {},')
    if report.macro is None:
        lines.append('  "macro": null,')
    else:
        m = report.macro
        lines.append(
            f'  "macro": {{"fpr": {_f(m.fpr)}, "precision": {_f(m.precision)}, '
            f'"recall": {_f(m.recall)}, "f1": {_f(m.f1)}}},'
        )
    if report.multilabel is None:
        lines.append('  "multilabel": null,')
    else:
        ml = report.multilabel
        f1_items = ", ".join(
            f"{_json_str(str(lab))}: {_f(ml.per_class_loose_f1[lab])}"
            for lab in sorted(ml.per_class_loose_f1, key=str)
        )
        lines.append(
            f'  "multilabel": {{"loose_acc": {_f(ml.loose_acc)}, '
            f'"exact_acc": {_f(ml.exact_acc)}, "per_class_loose_f1": {{{f1_items}}}}},'
        )
    bins = ", ".join(f"[{_json_str(str(lab))}, {_f(share)}]" for lab, share in report.trash_bins)
    lines.append(f'  "trash_bins": [{bins}]')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _render_tsv(report: MetricsReport) -> str:
    rows = ["section\tclass\ttp\tfp\tfn\ttn\tfpr\tprecision\trecall\tf1"]
    for lab in sorted(report.per_class, key=str):
        m = report.per_class[lab]
        rows.append(
            f"class\t{lab}\t{m.tp}\t{m.fp}\t{m.fn}\t{m.tn}"
            f"\t{_f(m.fpr)}\t{_f(m.precision)}\t{_f(m.recall)}\t{_f(m.f1)}"
        )
    if report.macro is not None:
        m = report.macro
        rows.append(
            f"macro\t-\t-\t-\t-\t-\t{_f(m.fpr)}\t{_f(m.precision)}\t{_f(m.recall)}\t{_f(m.f1)}"
        )
    if report.multilabel is not None:
        ml = report.multilabel
        rows.append(f"multilabel\tloose_acc\t{_f(ml.loose_acc)}")
        rows.append(f"multilabel\texact_acc\t{_f(ml.exact_acc)}")
        for lab in sorted(ml.per_class_loose_f1, key=str):
            rows.append(f"multilabel_f1\t{lab}\t{_f(ml.per_class_loose_f1[lab])}")
    for lab, share in report.trash_bins:
        rows.append(f"trash_bin\t{lab}\t{_f(share)}")
    return "\n".join(rows) + "\n"


def _render_markdown(report: MetricsReport) -> str:
    parts: list[str] = []
    if report.per_class:
        parts.append("| Language | FPR | Prec. | Rec. | F1 |")
        parts.append("|---|---|---|---|---|")
        for lab in sorted(report.per_class, key=str):
            m = report.per_class[lab]
            parts.append(
                f"| {lab} | {_f(m.fpr)} | {_f(m.precision)} | {_f(m.recall)} | {_f(m.f1)} |"
            )
        if report.macro is not None:
            m = report.macro
            parts.append(
                f"| *macro* | {_f(m.fpr)} | {_f(m.precision)} | {_f(m.recall)} | {_f(m.f1)} |"
            )
        parts.append("")
    if report.multilabel is not None:
        ml = report.multilabel
        labs = sorted(ml.per_class_loose_f1, key=str)
        parts.append("| Loose Acc. | Exact Acc. | " + " | ".join(f"{lab} F1" for lab in labs) + " |")
        parts.append("|---|---|" + "---|" * len(labs))
        parts.append(
            f"| {_f(ml.loose_acc)} | {_f(ml.exact_acc)} | "
            + " | ".join(_f(ml.per_class_loose_f1[lab]) for lab in labs)
            + " |"
        )
        parts.append("")
    if report.trash_bins:
        parts.append("| Trash bin | Foreign share |")
        parts.append("|---|---|")
        for lab, share in report.trash_bins:
            parts.append(f"| {lab} | {_f(share)} |")
        parts.append("")
    if not parts:
        parts.append("(empty report)")
        parts.append("")
    return "\n".join(parts)
