from __future__ import annotations

import unicodedata

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lidkit.corpus import (
    LabeledText,
    NoiseSpec,
    dedup,
    gen_noise,
    load_script_ranges,
    normalize_for_dedup,
    parse_fasttext_line,
    read_fasttext,
    read_multilabel_tsv,
    write_fasttext,
)
from lidkit.errors import (
    EmptyGoldSetError,
    InvalidRangeError,
    MalformedLineError,
)
from lidkit.labels import ZXX, parse_label

ENG = parse_label("eng_Latn")
HRV = parse_label("hrv_Latn")
SRP = parse_label("srp_Latn")


class TestReadFasttext:
    def test_single_label(self, tmp_path):
        path = tmp_path / "train.txt"
        path.write_text("__label__eng_Latn hello world\n", encoding="utf-8")
        items = list(read_fasttext(path))
        assert items == [LabeledText(frozenset({ENG}), "hello world")]

    def test_multilabel_line(self, tmp_path):
        path = tmp_path / "gold.txt"
        path.write_text("__label__hrv_Latn __label__srp_Latn dobar dan\n", encoding="utf-8")
        (item,) = read_fasttext(path)
        assert item.labels == {HRV, SRP}
        assert item.text == "dobar dan"

    def test_malformed_collected_with_line_numbers(self, tmp_path):
        path = tmp_path / "mixed.txt"
        path.write_text(
            "__label__eng_Latn ok\nno label here\n__label__bad! text\n__label__deu_Latn gut\n",
            encoding="utf-8",
        )
        errors: list[MalformedLineError] = []
        items = list(read_fasttext(path, errors=errors))
        assert len(items) == 2
        assert [e.line_no for e in errors] == [2, 3]

    def test_strict_raises(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("no label here\n", encoding="utf-8")
        with pytest.raises(MalformedLineError):
            list(read_fasttext(path, strict=True))

    def test_round_trip(self, tmp_path):
        items = [
            LabeledText(frozenset({ENG}), "hello world"),
            LabeledText(frozenset({HRV, SRP}), "dobar dan"),
            LabeledText(frozenset({ZXX}), "@@@@####"),
        ]
        path = tmp_path / "rt.txt"
        write_fasttext(items, path)
        assert list(read_fasttext(path, strict=True)) == items

    @given(
        rows=st.lists(
            st.tuples(
                st.sampled_from(["eng_Latn", "deu_Latn", "zxx_Zxxx"]),
                st.text(
                    alphabet=st.characters(
                        blacklist_categories=("Cs", "Cc"), blacklist_characters="\n"
                    ),
                    max_size=30,
                ),
            ),
            max_size=10,
        )
    )
    @settings(max_examples=50, deadline=None)
    def test_round_trip_property(self, rows, tmp_path_factory):
        from hypothesis import assume

        assume(
            all(not text.split(maxsplit=1)[0].startswith("__label__")
                for _, text in rows if text.split())
        )
        items = [LabeledText(frozenset({parse_label(lab)}), text) for lab, text in rows]
        path = tmp_path_factory.mktemp("rt") / "data.txt"
        write_fasttext(items, path)
        back = list(read_fasttext(path, strict=True))
        # whitespace at the label/text boundary is not preserved exactly:
        # the reader strips it, so compare normalized text
        assert [(i.labels, i.text.lstrip()) for i in items] == [
            (i.labels, i.text) for i in back
        ]

    def test_label_lookalike_text_rejected_on_write(self, tmp_path):
        # would silently change labels on read-back, so the writer refuses
        bad = LabeledText(frozenset({ENG}), "__label__deu_Latn hello")
        with pytest.raises(ValueError):
            write_fasttext([bad], tmp_path / "bad.txt")

    def test_text_starting_with_spaces(self):
        item = parse_fasttext_line("__label__eng_Latn   padded text")
        assert item.text == "padded text"

    def test_newline_in_text_rejected_on_write(self, tmp_path):
        bad = LabeledText(frozenset({ENG}), "two\nlines")
        with pytest.raises(ValueError):
            write_fasttext([bad], tmp_path / "bad.txt")


class TestReadMultilabelTsv:
    def test_basic(self, tmp_path):
        path = tmp_path / "gold.tsv"
        path.write_text("hrv_Latn,srp_Latn\tdobar dan\n", encoding="utf-8")
        (item,) = read_multilabel_tsv(path)
        assert item.labels == {HRV, SRP}
        assert item.text == "dobar dan"

    def test_empty_gold_set(self, tmp_path):
        path = tmp_path / "gold.tsv"
        path.write_text("\tsome text\n", encoding="utf-8")
        with pytest.raises(EmptyGoldSetError):
            list(read_multilabel_tsv(path))

    def test_duplicates_collapse(self, tmp_path):
        path = tmp_path / "gold.tsv"
        path.write_text("eng_Latn,eng_Latn\thi\n", encoding="utf-8")
        (item,) = read_multilabel_tsv(path)
        assert item.labels == {ENG}

    def test_missing_tab(self, tmp_path):
        path = tmp_path / "gold.tsv"
        path.write_text("eng_Latn no tab\n", encoding="utf-8")
        with pytest.raises(MalformedLineError):
            list(read_multilabel_tsv(path))


class TestGenNoise:
    def test_deterministic(self):
        spec = lambda: NoiseSpec(["Latn", "Cyrl"], 25, len_min=5, len_max=30, seed=42)
        assert gen_noise(spec()) == gen_noise(spec())

    def test_all_labeled_zxx(self):
        for item in gen_noise(NoiseSpec(["Grek"], 10, seed=1)):
            assert item.labels == {ZXX}

    def test_range_membership(self):
        table = load_script_ranges()
        spec = NoiseSpec(["Latn"], 50, len_min=10, len_max=40, seed=7)
        ranges = table["Latn"]
        for item in gen_noise(spec):
            for ch in item.text:
                cp = ord(ch)
                assert any(lo <= cp <= hi for lo, hi in ranges)
                assert unicodedata.category(ch) != "Cn"

    def test_lengths_in_bounds(self):
        spec = NoiseSpec(["Thai"], 40, len_min=3, len_max=9, seed=0)
        lengths = {len(item.text) for item in gen_noise(spec)}
        assert lengths <= set(range(3, 10))

    def test_n_zero(self):
        assert gen_noise(NoiseSpec(["Latn"], 0, seed=5)) == []

    def test_distinct_seeds_distinct_output(self):
        outputs = {
            tuple(i.text for i in gen_noise(NoiseSpec(["Latn"], 3, seed=s)))
            for s in range(100)
        }
        assert len(outputs) == 100

    def test_unknown_script(self):
        with pytest.raises(InvalidRangeError):
            NoiseSpec(["Qaax"], 5)

    def test_bad_lengths(self):
        with pytest.raises(InvalidRangeError):
            NoiseSpec(["Latn"], 5, len_min=0, len_max=4)
        with pytest.raises(InvalidRangeError):
            NoiseSpec(["Latn"], 5, len_min=9, len_max=4)

    def test_unassigned_range_rejected(self):
        # a range consisting only of unassigned code points
        with pytest.raises(InvalidRangeError):
            NoiseSpec(["Ghost"], 1, ranges={"Ghost": [(0x0860 + 0x4B, 0x086F)]})

    def test_shipped_table_covers_inventory_scripts(self):
        from lidkit.labels import load_default_inventory

        table = load_script_ranges()
        scripts = {lab.script for lab in load_default_inventory()}
        scripts.discard("Zxxx")
        missing = scripts - set(table)
        assert missing == set(), f"scripts without noise ranges: {missing}"


def _lt(text: str) -> LabeledText:
    return LabeledText.single(ENG, text)


def brute_jaccard(a: str, b: str, k: int = 5) -> float:
    sh = lambda s: {s[i : i + k] for i in range(len(s) - k + 1)} if len(s) >= k else ({s} if s else set())
    A, B = sh(a), sh(b)
    return len(A & B) / len(A | B) if A | B else 0.0


class TestDedup:
    def test_exact_byte_equal(self):
        kept, removed = dedup([_lt("same line")], [_lt("same line")], "exact")
        assert kept == []
        assert removed[0].kind == "exact"
        assert removed[0].train_line_no == 1

    def test_exact_whitespace_normalization(self):
        kept, removed = dedup([_lt("a  b")], [_lt("a b")], "exact")
        assert kept == []
        assert removed[0].similarity == 1.0

    def test_disjoint_kept(self):
        kept, removed = dedup([_lt("alpha beta")], [_lt("gamma delta")], "shingle")
        assert removed == []
        assert len(kept) == 1

    def test_near_duplicate_kept_exact_removed_shingle(self):
        # differ by one trailing character: high 5-gram overlap, not byte-equal
        train_text = "the quick brown fox jumps over the lazy dog"
        test_text = train_text + "!"
        jac = brute_jaccard(normalize_for_dedup(test_text), normalize_for_dedup(train_text))
        assert jac > 0.8  # oracle confirms the pair is above threshold
        kept_exact, removed_exact = dedup([_lt(test_text)], [_lt(train_text)], "exact")
        assert len(kept_exact) == 1 and removed_exact == []
        kept_sh, removed_sh = dedup([_lt(test_text)], [_lt(train_text)], "shingle")
        assert kept_sh == []
        assert removed_sh[0].kind == "shingle"
        assert removed_sh[0].similarity == pytest.approx(jac)

    def test_below_threshold_kept_in_shingle(self):
        a = "completely different sentence about winter"
        b = "another unrelated phrase mentioning summer"
        assert brute_jaccard(normalize_for_dedup(a), normalize_for_dedup(b)) <= 0.8
        kept, removed = dedup([_lt(a)], [_lt(b)], "shingle")
        assert removed == []

    def test_partition_property(self):
        rng = np.random.default_rng(4)
        words = ["aa", "bb", "cc", "dd", "ee"]
        mk = lambda: _lt(" ".join(words[int(i)] for i in rng.integers(5, size=6)))
        test = [mk() for _ in range(40)]
        train = [mk() for _ in range(40)]
        kept, removed = dedup(test, train, "shingle")
        assert len(kept) + len(removed) == len(test)
        removed_items = [r.item for r in removed]
        for item in test:
            assert (item in kept) != (item in removed_items) or (
                kept.count(item) + removed_items.count(item)
                == test.count(item)
            )

    def test_kept_disjoint_from_train_under_exact_predicate(self):
        test = [_lt("x y"), _lt("a  b"), _lt("fresh line")]
        train = [_lt("a b"), _lt("x y")]
        kept, _ = dedup(test, train, "exact")
        train_norms = {normalize_for_dedup(t.text) for t in train}
        assert all(normalize_for_dedup(k.text) not in train_norms for k in kept)
