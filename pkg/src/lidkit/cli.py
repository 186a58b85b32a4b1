"""Command-line driver.

Subcommands cover the full workflow: train, predict, eval, ensemble,
cascade, gen-noise and dedup. Exit codes are stable: 0 success, 1 usage,
2 data/model error, 3 I/O error. stdout carries only data and reports;
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from .corpus import (
    LabeledText,
    NoiseSpec,
    dedup,
    format_fasttext_line,
    gen_noise,
    load_script_ranges,
    read_fasttext,
    read_multilabel_tsv,
    write_fasttext,
)
from .decision import (
    CascadeConfig,
    SpecialistPool,
    ThresholdPolicy,
    apply_threshold,
    cascade_predict_detail,
    ensemble_top1,
    ensemble_top3,
)
from .errors import DataError, LengthMismatchError, MalformedLineError
from .features import FeatureParams
from .labels import (
    OTHER,
    AlignmentMap,
    Label,
    MergeMap,
    canonicalize,
    load_default_inventory,
    load_default_merge_map,
    parse_label,
)
from .metrics import render_report, report_multilabel, report_single
from .model import Model, Prediction, TrainParams, predict_topk, train
from .modelio import load_model, save_model


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _default_threads() -> int:
    try:
        return max(1, int(os.environ.get("LIDKIT_THREADS", "1")))
    except ValueError:
        return 1


def _resolve_merge_map(arg: str) -> MergeMap:
    if arg == "v3":
        return load_default_merge_map()
    if arg == "none":
        return MergeMap.identity()
    return MergeMap.from_tsv(arg)


def _canon_example(item: LabeledText, merge: MergeMap) -> LabeledText:
    return LabeledText(frozenset(canonicalize(lab, merge) for lab in item.labels), item.text)


def _load_model_for(args) -> Model:
    model = load_model(args.model)
    if getattr(args, "normalize", "none") != "none":
        model.feature = dataclasses.replace(model.feature, normalize=args.normalize)
    if getattr(args, "pooling", "mean") != "mean":
        model.pooling = args.pooling
    return model


def _read_lines(path: str) -> list[str]:
    if path == "-":
        return [line.rstrip("\n") for line in sys.stdin]
    with open(path, encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f]


def _read_pred_file(path: str) -> list[list[tuple[Label, float]]]:
    """Parse prediction rows: ``label(<TAB>prob(<TAB>label<TAB>prob)*)?``.

    Label-only rows get probability 1.0 (they always pass thresholds).
    """
    rows: list[list[tuple[Label, float]]] = []
    with open(path, encoding="utf-8") as f:
        for line_no, line in enumerate(f, 1):
            fields = line.rstrip("\n").split("\t")
            if not fields or fields == [""]:
                raise MalformedLineError(path, line_no, "empty prediction row")
            pairs: list[tuple[Label, float]] = []
            if len(fields) == 1:
                pairs.append((parse_label(fields[0]), 1.0))
            elif len(fields) % 2 == 0:
                for i in range(0, len(fields), 2):
                    try:
                        prob = float(fields[i + 1])
                    except ValueError as exc:
                        raise MalformedLineError(
                            path, line_no, f"bad probability {fields[i + 1]!r}"
                        ) from exc
                    pairs.append((parse_label(fields[i]), prob))
            else:
                raise MalformedLineError(path, line_no, "expected label/prob pairs")
            rows.append(pairs)
    return rows


def _report_read_errors(errors: list[MalformedLineError], what: str) -> None:
    if errors:
        _log(f"warning: skipped {len(errors)} malformed line(s) in {what}")
        for err in errors[:5]:
            _log(f"  {err}")


def _predict_labels(
    model: Model, lines: list[str], k: int, threads: int
) -> list[Prediction]:
    if threads <= 1 or len(lines) < 2 * threads:
        return [predict_topk(model, line, k) for line in lines]
    chunks = [lines[i::threads] for i in range(threads)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        results = list(pool.map(lambda ch: [predict_topk(model, ln, k) for ln in ch], chunks))
    merged: list[Prediction] = [None] * len(lines)  # type: ignore[list-item]
    for offset, chunk_preds in enumerate(results):
        merged[offset :: threads] = chunk_preds
    return merged


# ---------------------------------------------------------------------------
# Subcommands


def _cmd_train(args) -> int:
    errors: list[MalformedLineError] = []
    corpus = list(read_fasttext(args.data, strict=args.strict, errors=errors))
    _report_read_errors(errors, args.data)
    merge = _resolve_merge_map(args.merge_map)
    corpus = [_canon_example(ex, merge) for ex in corpus]
    feature = FeatureParams(
        minn=args.minn,
        maxn=args.maxn,
        word_ngrams=args.word_ngrams,
        bucket=args.bucket,
        min_count=args.min_count,
        normalize=None if args.normalize == "none" else args.normalize,
    )
    params = TrainParams(
        dim=args.dim,
        lr=args.lr,
        epochs=args.epochs,
        seed=args.seed,
        threads=args.threads,
        pooling=args.pooling,
        feature=feature,
    )
    started = time.perf_counter()
    model = train(corpus, params)
    wall = time.perf_counter() - started
    save_model(model, args.out)
    print(
        f"classes\t{len(model.vocab.labels)}\n"
        f"examples\t{len(corpus)}\n"
        f"words\t{len(model.vocab.words)}\n"
        f"wall_seconds\t{wall:.2f}\n"
        f"model\t{args.out}"
    )
    return 0


def _format_prediction(pred: Prediction, tau: float, fmt: str) -> str:
    top_label, top_prob = pred.ranked[0]
    shown = [(top_label if top_prob >= tau else OTHER, top_prob)] + pred.ranked[1:]
    if fmt == "json":
        return json.dumps(
            {"ranked": [[str(lab), float(_fmt(p))] for lab, p in shown]}, ensure_ascii=False
        )
    return "\t".join(f"{lab}\t{_fmt(p)}" for lab, p in shown)


def _cmd_predict(args) -> int:
    model = _load_model_for(args)
    lines = _read_lines(args.input)
    preds = _predict_labels(model, lines, args.k, args.threads)
    for pred in preds:
        print(_format_prediction(pred, args.tau, args.format))
    return 0


def _cmd_eval(args) -> int:
    merge = _resolve_merge_map(args.merge_map)
    if args.multilabel:
        gold_items = list(read_multilabel_tsv(args.gold))
    else:
        gold_items = list(read_fasttext(args.gold, strict=True))
        for item in gold_items:
            if len(item.labels) != 1:
                raise DataError(
                    "gold file has multilabel rows; pass --multilabel with a labels<TAB>text file"
                )
    gold_items = [_canon_example(item, merge) for item in gold_items]
    texts = [item.text for item in gold_items]

    if args.model:
        tau = args.tau if args.tau is not None else 0.5
        model = _load_model_for(args)
        policy = ThresholdPolicy(tau)
        preds = [
            apply_threshold(p, policy)
            for p in _predict_labels(model, texts, 1, args.threads)
        ]
    else:
        tau = args.tau if args.tau is not None else 0.0
        rows = _read_pred_file(args.pred_file)
        if len(rows) != len(gold_items):
            raise LengthMismatchError(
                f"{len(gold_items)} gold rows vs {len(rows)} prediction rows"
            )
        policy = ThresholdPolicy(tau)
        preds = [
            apply_threshold(Prediction(row), policy) for row in rows
        ]
    preds = [canonicalize(p, merge) for p in preds]

    if args.multilabel:
        report = report_multilabel([item.labels for item in gold_items], preds)
    else:
        golds = [next(iter(item.labels)) for item in gold_items]
        report = report_single(golds, preds, args.trash_threshold)
    print(render_report(report, args.report), end="")
    return 0


def _aligned_pairs(
    pairs: list[tuple[Label, float]],
    merge: MergeMap,
    alignment: AlignmentMap | None,
) -> list[tuple[Label, float]]:
    """Canonicalize/align a ranked pair list, combining collided labels by
    their maximum probability while preserving rank order."""
    out: dict[Label, float] = {}
    for label, prob in pairs:
        mapped = alignment(label) if alignment is not None else canonicalize(label, merge)
        if mapped not in out:
            out[mapped] = prob
    return list(out.items())


def _cmd_ensemble(args) -> int:
    rows_a = _read_pred_file(args.pred_a)
    rows_b = _read_pred_file(args.pred_b)
    if len(rows_a) != len(rows_b):
        raise LengthMismatchError(f"{len(rows_a)} rows in A vs {len(rows_b)} rows in B")
    merge = _resolve_merge_map(args.merge_map)
    inventory = (
        [parse_label(row[0]) for row in _read_tsv_first_col(args.inventory)]
        if args.inventory
        else load_default_inventory()
    )
    align_a = (
        AlignmentMap.from_tsv(args.align_a, inventory, merge) if args.align_a else None
    )
    align_b = (
        AlignmentMap.from_tsv(args.align_b, inventory, merge) if args.align_b else None
    )

    outputs: list[Label] = []
    for row_a, row_b in zip(rows_a, rows_b):
        if args.mode == "top1":
            label_a = apply_threshold(Prediction(row_a), ThresholdPolicy(args.tau_a))
            label_b = apply_threshold(Prediction(row_b), ThresholdPolicy(args.tau_b))
            pair_a = _aligned_pairs([(label_a, 1.0)], merge, align_a)[0][0]
            pair_b = _aligned_pairs([(label_b, 1.0)], merge, align_b)[0][0]
            outputs.append(ensemble_top1(pair_a, pair_b))
        else:
            pairs_a = _aligned_pairs(row_a[:3], merge, align_a)
            pairs_b = _aligned_pairs(row_b[:3], merge, align_b)
            outputs.append(ensemble_top3(pairs_a, pairs_b))

    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            for label in outputs:
                f.write(f"{label}\n")
    if args.gold:
        if args.multilabel:
            gold_items = [_canon_example(i, merge) for i in read_multilabel_tsv(args.gold)]
            if len(gold_items) != len(outputs):
                raise LengthMismatchError(
                    f"{len(gold_items)} gold rows vs {len(outputs)} ensemble rows"
                )
            report = report_multilabel([i.labels for i in gold_items], outputs)
        else:
            gold_items = [
                _canon_example(i, merge) for i in read_fasttext(args.gold, strict=True)
            ]
            if len(gold_items) != len(outputs):
                raise LengthMismatchError(
                    f"{len(gold_items)} gold rows vs {len(outputs)} ensemble rows"
                )
            golds = [next(iter(i.labels)) for i in gold_items]
            report = report_single(golds, outputs, args.trash_threshold)
        print(render_report(report, args.report), end="")
    elif not args.out:
        for label in outputs:
            print(label)
    return 0


def _read_tsv_first_col(path: str) -> list[list[str]]:
    rows = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            rows.append(line.split("\t"))
    return rows


def _cmd_cascade(args) -> int:
    base = _load_model_for_base(args)
    cfg = CascadeConfig.from_tsv(args.config)
    cfg.validate_members(base.vocab.labels)
    pool = SpecialistPool()
    policy = ThresholdPolicy(args.tau)
    for line in _read_lines(args.input):
        label, prob, _stage = cascade_predict_detail(base, cfg, pool, line, policy)
        print(f"{label}\t{_fmt(prob)}")
    return 0


def _load_model_for_base(args) -> Model:
    model = load_model(args.base)
    if args.normalize != "none":
        model.feature = dataclasses.replace(model.feature, normalize=args.normalize)
    if args.pooling != "mean":
        model.pooling = args.pooling
    return model


def _cmd_gen_noise(args) -> int:
    table = load_script_ranges(args.ranges)
    scripts = [s.strip() for s in args.scripts.split(",") if s.strip()] if args.scripts else sorted(table)
    spec = NoiseSpec(
        scripts, args.n, len_min=args.len_min, len_max=args.len_max, seed=args.seed, ranges=table
    )
    items = gen_noise(spec)
    if args.out:
        write_fasttext(items, args.out)
        _log(f"wrote {len(items)} noise lines to {args.out}")
    else:
        for item in items:
            print(format_fasttext_line(item))
    return 0


def _cmd_dedup(args) -> int:
    test_errors: list[MalformedLineError] = []
    train_errors: list[MalformedLineError] = []
    test_items = list(read_fasttext(args.test, errors=test_errors))
    _report_read_errors(test_errors, args.test)
    kept, removed = dedup(
        test_items,
        read_fasttext(args.train, errors=train_errors),
        mode=args.mode,
    )
    _report_read_errors(train_errors, args.train)
    write_fasttext(kept, args.out_kept)
    write_fasttext((r.item for r in removed), args.out_removed)
    for r in removed:
        _log(
            f"removed test example {r.test_line_no}: {r.kind} match with train line "
            f"{r.train_line_no} (similarity {r.similarity:.3f})"
        )
    _log(f"dedup: kept {len(kept)}, removed {len(removed)}")
    return 0


# ---------------------------------------------------------------------------
# Parser


def _add_model_output_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--normalize", choices=["none", "nfc"], default="none",
                   help="text preprocessing (must match the setting used at training)")
    p.add_argument("--pooling", choices=["mean", "sum"], default="mean",
                   help="hidden-vector pooling (must match the setting used at training)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lidkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("train", help="train a classifier", description="Train a classifier.")
    p.add_argument("--data", required=True, help="training file (__label__xxx_Yyyy text)")
    p.add_argument("--out", required=True, help="output model path")
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--lr", type=float, default=0.1)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--minn", type=int, default=2)
    p.add_argument("--maxn", type=int, default=5)
    p.add_argument("--word-ngrams", type=int, default=1)
    p.add_argument("--bucket", type=int, default=2**21)
    p.add_argument("--min-count", type=int, default=5)
    p.add_argument("--threads", type=int, default=_default_threads())
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--merge-map", default="v3",
                   help='"v3" (default), "none", or a source<TAB>target TSV path')
    p.add_argument("--strict", action="store_true", help="fail on malformed lines")
    _add_model_output_flags(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="predict labels for input lines")
    p.add_argument("--model", required=True)
    p.add_argument("--input", default="-", help="input text file, one example per line")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--tau", type=float, default=0.5,
                   help="softmax threshold; rank-1 label below it becomes 'other'")
    p.add_argument("--format", choices=["tsv", "json"], default="tsv")
    p.add_argument("--threads", type=int, default=_default_threads())
    _add_model_output_flags(p)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="evaluate a model or a prediction file")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model")
    src.add_argument("--pred-file", help="external predictions, row-aligned with --gold")
    p.add_argument("--gold", required=True)
    p.add_argument("--multilabel", action="store_true",
                   help="gold is a labels<TAB>text TSV with comma-separated label sets")
    p.add_argument("--tau", type=float, default=None,
                   help="softmax threshold (default 0.5 with --model, 0 with --pred-file)")
    p.add_argument("--merge-map", default="v3")
    p.add_argument("--report", choices=["json", "tsv", "markdown"], default="json")
    p.add_argument("--trash-threshold", type=float, default=0.5)
    p.add_argument("--threads", type=int, default=_default_threads())
    _add_model_output_flags(p)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("ensemble", help="combine two prediction files by agreement")
    p.add_argument("--pred-a", required=True)
    p.add_argument("--pred-b", required=True)
    p.add_argument("--mode", choices=["top1", "top3"], default="top1")
    p.add_argument("--tau-a", type=float, default=0.5,
                   help="threshold for side A (top1 mode)")
    p.add_argument("--tau-b", type=float, default=0.0,
                   help="threshold for side B (top1 mode; 0 = no thresholding)")
    p.add_argument("--align-a", help="alignment TSV for side A labels")
    p.add_argument("--align-b", help="alignment TSV for side B labels")
    p.add_argument("--inventory", help="target inventory file (default: shipped v3)")
    p.add_argument("--merge-map", default="v3")
    p.add_argument("--gold", help="evaluate the ensemble against this gold file")
    p.add_argument("--multilabel", action="store_true")
    p.add_argument("--report", choices=["json", "tsv", "markdown"], default="json")
    p.add_argument("--trash-threshold", type=float, default=0.5)
    p.add_argument("--out", help="write ensemble labels here (stdout without --gold)")
    p.set_defaults(func=_cmd_ensemble)

    p = sub.add_parser("cascade", help="route predictions through group specialists")
    p.add_argument("--base", required=True, help="base model path")
    p.add_argument("--config", required=True,
                   help="group<TAB>member_label<TAB>model_path TSV")
    p.add_argument("--input", required=True)
    p.add_argument("--tau", type=float, default=0.5)
    _add_model_output_flags(p)
    p.set_defaults(func=_cmd_cascade)

    p = sub.add_parser("gen-noise", help="generate synthetic not-a-language data")
    p.add_argument("--scripts", help="comma-separated script names (default: all known)")
    p.add_argument("--ranges", help="script ranges TSV (default: shipped table)")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--len-min", type=int, default=20)
    p.add_argument("--len-max", type=int, default=80)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output file (default: stdout)")
    p.set_defaults(func=_cmd_gen_noise)

    p = sub.add_parser("dedup", help="remove test lines that occur in training data")
    p.add_argument("--test", required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--mode", choices=["exact", "shingle"], default="exact")
    p.add_argument("--out-kept", required=True)
    p.add_argument("--out-removed", required=True)
    p.set_defaults(func=_cmd_dedup)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DataError as exc:
        _log(f"lidkit: error: {exc}")
        return 2
    except OSError as exc:
        _log(f"lidkit: io error: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
