from __future__ import annotations

import numpy as np
import pytest

from lidkit.corpus import LabeledText
from lidkit.decision import (
    CascadeConfig,
    CascadeGroup,
    SpecialistPool,
    ThresholdPolicy,
    apply_threshold,
    cascade_predict,
    cascade_predict_detail,
    ensemble_top1,
    ensemble_top3,
)
from lidkit.errors import ConfigError, SpecialistMissingError
from lidkit.labels import OTHER, parse_label
from lidkit.model import Prediction, predict_topk, train
from lidkit.modelio import save_model

from conftest import toy_params

SRP = parse_label("srp_Latn")
HRV = parse_label("hrv_Latn")
BOS = parse_label("bos_Latn")
ENG = parse_label("eng_Latn")
LIJ = parse_label("lij_Latn")


def _pred(*pairs):
    return Prediction([(lab, p) for lab, p in pairs])


class TestThreshold:
    def test_above_tau_passes(self):
        assert apply_threshold(_pred((SRP, 0.73)), ThresholdPolicy(0.5)) == SRP

    def test_below_tau_rejected(self):
        assert apply_threshold(_pred((LIJ, 0.49)), ThresholdPolicy(0.5)) is OTHER

    def test_exactly_at_tau_passes(self):
        assert apply_threshold(_pred((SRP, 0.5)), ThresholdPolicy(0.5)) == SRP

    def test_tau_zero_always_top1(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = float(rng.random())
            assert apply_threshold(_pred((HRV, p)), ThresholdPolicy(0.0)) == HRV

    def test_tau_out_of_range_rejected(self):
        with pytest.raises(ConfigError):
            ThresholdPolicy(1.5)

    def test_monotone_rejection(self):
        # as tau grows, the set of accepted predictions only shrinks
        rng = np.random.default_rng(1)
        preds = [_pred((SRP, float(rng.random()))) for _ in range(100)]
        previous = None
        for tau in np.linspace(0, 1, 11):
            accepted = {
                i for i, p in enumerate(preds)
                if apply_threshold(p, ThresholdPolicy(float(tau))) is not OTHER
            }
            if previous is not None:
                assert accepted <= previous
            previous = accepted


class TestEnsembleTop1:
    def test_agreement(self):
        assert ensemble_top1(HRV, HRV) == HRV

    def test_disagreement(self):
        assert ensemble_top1(BOS, SRP) is OTHER

    def test_one_side_rejected(self):
        assert ensemble_top1(OTHER, ENG) is OTHER

    def test_idempotent_and_symmetric(self):
        for a in (HRV, OTHER):
            assert ensemble_top1(a, a) == a
        assert ensemble_top1(HRV, SRP) == ensemble_top1(SRP, HRV)


class TestEnsembleTop3:
    def test_intersection_highest_mean(self):
        x, y, z, w = ENG, HRV, SRP, BOS
        a = _pred((x, 0.6), (y, 0.3), (z, 0.1))
        b = _pred((y, 0.5), (w, 0.4), (x, 0.05))
        # intersection {x, y}; means: x 0.325, y 0.4 -> y
        assert ensemble_top3(a, b) == y

    def test_disjoint_sets(self):
        a = _pred((ENG, 0.9), (HRV, 0.05), (SRP, 0.03))
        b = _pred((BOS, 0.8), (LIJ, 0.1), (OTHER, 0.05))
        assert ensemble_top3(a, b) is OTHER

    def test_identical_lists_give_shared_top1(self):
        a = _pred((HRV, 0.7), (SRP, 0.2), (BOS, 0.1))
        assert ensemble_top3(a, a) == HRV

    def test_truncates_to_three(self):
        a = _pred((ENG, 0.4), (HRV, 0.3), (SRP, 0.2), (BOS, 0.1))
        b = _pred((BOS, 0.9), (LIJ, 0.05), (OTHER, 0.02))
        # BOS is rank 4 on side a: outside its top-3, so no agreement
        assert ensemble_top3(a, b) is OTHER

    def test_tie_break_by_label_order(self):
        a = _pred((SRP, 0.4), (BOS, 0.4), (ENG, 0.1))
        b = _pred((BOS, 0.4), (SRP, 0.4), (ENG, 0.1))
        # equal means for BOS and SRP: bos_Latn < srp_Latn lexicographically
        assert ensemble_top3(a, b) == BOS
        order = {SRP: 0, BOS: 1, ENG: 2}
        assert ensemble_top3(a, b, label_order=order) == SRP

    def test_other_never_a_candidate(self):
        a = _pred((OTHER, 0.9), (HRV, 0.05), (SRP, 0.03))
        b = _pred((OTHER, 0.8), (BOS, 0.1), (ENG, 0.05))
        assert ensemble_top3(a, b) is OTHER


def _scandi_corpus(n=30, seed=0):
    # two distinguishable pseudo-variants plus one unrelated language
    rng = np.random.default_rng(seed)
    nob_words = ["ikke", "hvordan", "kjaerlighet", "gutten", "boken", "mellom"]
    nno_words = ["ikkje", "korleis", "kjaerleik", "guten", "boka", "mellom"]
    eng_words = ["the", "ship", "harbour", "window", "evening", "stone"]
    out = []
    for name, words in (("nob_Latn", nob_words), ("nno_Latn", nno_words), ("eng_Latn", eng_words)):
        label = parse_label(name)
        for _ in range(n):
            text = " ".join(words[int(i)] for i in rng.integers(len(words), size=6))
            out.append(LabeledText.single(label, text))
    return out


@pytest.fixture(scope="module")
def cascade_setup(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cascade")
    corpus = _scandi_corpus()
    base = train(corpus, toy_params(epochs=25))
    specialist_corpus = [ex for ex in corpus if next(iter(ex.labels)) != ENG]
    specialist = train(specialist_corpus, toy_params(epochs=25))
    spec_path = tmp / "scandinavian.bin"
    save_model(specialist, spec_path)
    cfg = CascadeConfig(
        [
            CascadeGroup(
                "scandinavian",
                frozenset({parse_label("nob_Latn"), parse_label("nno_Latn")}),
                str(spec_path),
            )
        ]
    )
    cfg.validate_members(base.vocab.labels)
    return base, cfg, tmp


class TestCascade:
    def test_out_of_group_passes_through(self, cascade_setup):
        base, cfg, _ = cascade_setup
        pool = SpecialistPool()
        policy = ThresholdPolicy(0.0)
        text = "the ship evening stone"
        base_label = apply_threshold(predict_topk(base, text, 1), policy)
        assert base_label == ENG
        assert cascade_predict(base, cfg, pool, text, policy) == ENG

    def test_in_group_routed_to_specialist(self, cascade_setup):
        base, cfg, _ = cascade_setup
        pool = SpecialistPool()
        policy = ThresholdPolicy(0.0)
        label, _prob, stage = cascade_predict_detail(base, cfg, pool, "ikkje korleis guten", policy)
        assert stage == "scandinavian"
        assert label == parse_label("nno_Latn")

    def test_specialist_output_within_members_or_other(self, cascade_setup):
        base, cfg, _ = cascade_setup
        pool = SpecialistPool()
        policy = ThresholdPolicy(0.5)
        members = cfg.groups[0].members
        rng = np.random.default_rng(9)
        words = ["ikke", "ikkje", "boka", "boken", "xyzzy"]
        for _ in range(30):
            text = " ".join(words[int(i)] for i in rng.integers(len(words), size=4))
            label, _, stage = cascade_predict_detail(base, cfg, pool, text, policy)
            if stage == "scandinavian":
                assert label in members or label is OTHER

    def test_rejection_short_circuits(self, cascade_setup):
        base, cfg, _ = cascade_setup
        pool = SpecialistPool()
        # impossible threshold: everything becomes other, specialist never loads
        policy = ThresholdPolicy(1.0)
        assert cascade_predict(base, cfg, pool, "ikkje korleis", policy) is OTHER
        assert pool._models == {}

    def test_missing_specialist(self, cascade_setup, tmp_path):
        base, _, _ = cascade_setup
        cfg = CascadeConfig(
            [
                CascadeGroup(
                    "scandinavian",
                    frozenset({parse_label("nob_Latn"), parse_label("nno_Latn")}),
                    str(tmp_path / "missing.bin"),
                )
            ]
        )
        pool = SpecialistPool()
        with pytest.raises(SpecialistMissingError):
            cascade_predict(base, cfg, pool, "ikkje korleis guten", ThresholdPolicy(0.0))

    def test_specialist_loaded_once(self, cascade_setup):
        base, cfg, _ = cascade_setup
        loads = []
        from lidkit.modelio import load_model

        pool = SpecialistPool(loader=lambda p: loads.append(p) or load_model(p))
        policy = ThresholdPolicy(0.0)
        for _ in range(3):
            cascade_predict(base, cfg, pool, "ikkje korleis guten", policy)
        assert len(loads) == 1


class TestCascadeConfig:
    def test_overlapping_groups_rejected(self):
        g1 = CascadeGroup("a", frozenset({HRV, SRP}), "a.bin")
        g2 = CascadeGroup("b", frozenset({SRP, BOS}), "b.bin")
        with pytest.raises(ConfigError):
            CascadeConfig([g1, g2])

    def test_member_not_in_base_inventory(self):
        cfg = CascadeConfig([CascadeGroup("a", frozenset({HRV}), "a.bin")])
        with pytest.raises(ConfigError):
            cfg.validate_members([ENG, SRP])

    def test_from_tsv(self, tmp_path):
        path = tmp_path / "cascade.tsv"
        path.write_text(
            "# groups\n"
            "south_slavic\tbos_Latn\tslav.bin\n"
            "south_slavic\thrv_Latn\tslav.bin\n"
            "south_slavic\tsrp_Latn\tslav.bin\n",
            encoding="utf-8",
        )
        cfg = CascadeConfig.from_tsv(path)
        assert len(cfg.groups) == 1
        assert cfg.groups[0].members == {BOS, HRV, SRP}
        assert cfg.owner(HRV).name == "south_slavic"
        assert cfg.owner(ENG) is None

    def test_from_tsv_conflicting_paths(self, tmp_path):
        path = tmp_path / "bad.tsv"
        path.write_text("g\tbos_Latn\ta.bin\ng\thrv_Latn\tb.bin\n", encoding="utf-8")
        with pytest.raises(ConfigError):
            CascadeConfig.from_tsv(path)
