#!/usr/bin/env python3
"""Throughput comparison: compiled kernels vs the numpy fallback.

Builds the bundled demo corpus, then times featurization+training and
prediction under each available backend. Run from the repository root:

    python benchmarks/bench_backends.py [--lines-per-language N] [--epochs N]
"""

from __future__ import annotations

import argparse
import tempfile
import time
from pathlib import Path

from lidkit import kernels
from lidkit.corpus import read_fasttext
from lidkit.demo import build_demo_corpus
from lidkit.features import FeatureParams
from lidkit.model import TrainParams, predict_topk, train


def run_backend(name: str, corpus, test_lines, args) -> dict:
    kernels.use(name)
    params = TrainParams(
        dim=args.dim,
        lr=0.5,
        epochs=args.epochs,
        seed=0,
        feature=FeatureParams(minn=2, maxn=4, bucket=args.bucket, min_count=3),
    )
    t0 = time.perf_counter()
    model = train(corpus, params)
    train_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    for line in test_lines:
        predict_topk(model, line, 1)
    predict_s = time.perf_counter() - t0
    return {
        "train_s": train_s,
        "train_lines_per_s": len(corpus) * args.epochs / train_s,
        "predict_s": predict_s,
        "predict_lines_per_s": len(test_lines) / predict_s,
    }


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--lines-per-language", type=int, default=640)
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--dim", type=int, default=16)
    parser.add_argument("--bucket", type=int, default=2**17)
    args = parser.parse_args()

    with tempfile.TemporaryDirectory() as tmp:
        train_path, test_path = build_demo_corpus(
            Path(tmp), lines_per_language=args.lines_per_language,
            noise_lines=args.lines_per_language,
        )
        corpus = list(read_fasttext(train_path, strict=True))
        test_lines = [ex.text for ex in read_fasttext(test_path, strict=True)]

    print(f"corpus: {len(corpus)} training lines, {len(test_lines)} test lines, "
          f"dim={args.dim} epochs={args.epochs} bucket={args.bucket}")
    results = {}
    for name in kernels.available_backends():
        results[name] = run_backend(name, corpus, test_lines, args)
        r = results[name]
        print(f"{name:>7}: train {r['train_s']:6.2f}s ({r['train_lines_per_s']:>9.0f} lines/s)   "
              f"predict {r['predict_s']:5.2f}s ({r['predict_lines_per_s']:>7.0f} lines/s)")
    if len(results) == 2:
        speedup_t = results["python"]["train_s"] / results["cython"]["train_s"]
        speedup_p = results["python"]["predict_s"] / results["cython"]["predict_s"]
        print(f"speedup: train {speedup_t:.1f}x, predict {speedup_p:.1f}x")


if __name__ == "__main__":
    main()
