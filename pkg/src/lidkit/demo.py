"""Bundled desk-scale demo corpus.

Builds a synthetic 8-language training/evaluation corpus from the shipped
public-domain-style seed sentences plus generated not-a-language
examples. Seed sentences are split between the train and test pools
before lines are composed, so held-out lines contain unseen sentences.
Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import LabeledText, NoiseSpec, gen_noise, write_fasttext
from .labels import parse_label

#: Languages with shipped seed files.
SEED_LANGUAGES = (
    "deu_Latn",
    "ell_Grek",
    "eng_Latn",
    "fin_Latn",
    "fra_Latn",
    "ita_Latn",
    "rus_Cyrl",
    "spa_Latn",
)

#: Scripts the bundled noise spans; includes the corpus' own scripts so
#: the noise class is not separable by script alone.
NOISE_SCRIPTS = ("Latn", "Cyrl", "Grek", "Arab", "Deva", "Hans", "Thai", "Geor")


def load_seed_sentences(lang: str) -> list[str]:
    path = resources.files("lidkit").joinpath("data", "seeds", f"{lang}.txt")
    sentences = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            sentences.append(line)
    return sentences


def _compose_lines(rng: np.random.Generator, pool: list[str], n: int) -> list[str]:
    """Build n lines, each 1-3 seed sentences sampled with replacement."""
    lines = []
    for _ in range(n):
        count = int(rng.integers(1, 4))
        picks = rng.integers(len(pool), size=count)
        lines.append(" ".join(pool[int(i)] for i in picks))
    return lines


def build_demo_corpus(
    out_dir: str | Path,
    lines_per_language: int = 640,
    noise_lines: int = 640,
    test_fraction: float = 0.2,
    seed: int = 20251,
) -> tuple[Path, Path]:
    """Write train/test files and return their paths.

    Each language contributes ``lines_per_language`` lines split
    ``test_fraction`` to the test side; noise likewise.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    n_test = int(round(lines_per_language * test_fraction))
    n_train = lines_per_language - n_test
    train: list[LabeledText] = []
    test: list[LabeledText] = []
    for lang in SEED_LANGUAGES:
        label = parse_label(lang)
        sentences = load_seed_sentences(lang)
        order = rng.permutation(len(sentences))
        cut = max(1, int(round(len(sentences) * test_fraction)))
        test_pool = [sentences[i] for i in order[:cut]]
        train_pool = [sentences[i] for i in order[cut:]]
        train.extend(LabeledText.single(label, t) for t in _compose_lines(rng, train_pool, n_train))
        test.extend(LabeledText.single(label, t) for t in _compose_lines(rng, test_pool, n_test))

    noise_test = int(round(noise_lines * test_fraction))
    train.extend(
        gen_noise(
            NoiseSpec(list(NOISE_SCRIPTS), noise_lines - noise_test, seed=int(rng.integers(2**32)))
        )
    )
    test.extend(
        gen_noise(NoiseSpec(list(NOISE_SCRIPTS), noise_test, seed=int(rng.integers(2**32))))
    )

    train_order = rng.permutation(len(train))
    test_order = rng.permutation(len(test))
    train_path = out_dir / "demo.train.txt"
    test_path = out_dir / "demo.test.txt"
    write_fasttext([train[int(i)] for i in train_order], train_path)
    write_fasttext([test[int(i)] for i in test_order], test_path)
    return train_path, test_path
