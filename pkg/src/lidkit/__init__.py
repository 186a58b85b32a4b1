"""lidkit: train, serve and evaluate fastText-style language identifiers.

The toolkit implements the full decision and evaluation stack around a
linear bag-of-features classifier: macrolanguage label merging, a
not-a-language class with synthetic training data, softmax thresholding,
two-model agreement ensembling, hierarchical group-specialist cascades,
and single-/multi-label metrics with trash-bin diagnostics.
"""

from .corpus import LabeledText, NoiseSpec, dedup, gen_noise, read_fasttext, write_fasttext
from .decision import (
    CascadeConfig,
    CascadeGroup,
    SpecialistPool,
    ThresholdPolicy,
    apply_threshold,
    cascade_predict,
    ensemble_top1,
    ensemble_top3,
)
from .features import FeatureParams, FeatureVector, char_ngrams, featurize, hash_feature, tokenize
from .labels import (
    OTHER,
    ZXX,
    AlignmentMap,
    Label,
    MergeMap,
    align,
    canonicalize,
    load_default_inventory,
    load_default_merge_map,
    parse_label,
    validate_inventory,
)
from .metrics import (
    ClassMetrics,
    ConfusionMatrix,
    MetricsReport,
    confusion,
    macro_average,
    multilabel_metrics,
    per_class_metrics,
    render_report,
    report_multilabel,
    report_single,
    trash_bin_report,
)
from .model import (
    Model,
    Prediction,
    TrainParams,
    Vocabulary,
    build_vocab,
    predict_topk,
    softmax_scores,
    train,
)
from .modelio import load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "AlignmentMap",
    "CascadeConfig",
    "CascadeGroup",
    "ClassMetrics",
    "ConfusionMatrix",
    "FeatureParams",
    "FeatureVector",
    "Label",
    "LabeledText",
    "MergeMap",
    "MetricsReport",
    "Model",
    "NoiseSpec",
    "OTHER",
    "Prediction",
    "SpecialistPool",
    "ThresholdPolicy",
    "TrainParams",
    "Vocabulary",
    "ZXX",
    "align",
    "apply_threshold",
    "build_vocab",
    "canonicalize",
    "cascade_predict",
    "char_ngrams",
    "confusion",
    "dedup",
    "ensemble_top1",
    "ensemble_top3",
    "featurize",
    "gen_noise",
    "hash_feature",
    "load_default_inventory",
    "load_default_merge_map",
    "load_model",
    "macro_average",
    "multilabel_metrics",
    "parse_label",
    "per_class_metrics",
    "predict_topk",
    "read_fasttext",
    "render_report",
    "report_multilabel",
    "report_single",
    "save_model",
    "softmax_scores",
    "tokenize",
    "train",
    "trash_bin_report",
    "validate_inventory",
    "write_fasttext",
]
