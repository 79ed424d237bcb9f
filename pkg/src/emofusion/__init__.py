"""Utterance-level emotion recognition toolkit.

Text side: a multi-resolution convolutional network trained with a
combined classification and pair-verification objective, plus a
count-based e-vector baseline. Acoustic side: a stacked LSTM over
frame features with temporal mean pooling. Late fusion concatenates
per-system scores into a linear SVM. Everything runs on numpy with
deterministic seeding, speaker-disjoint cross-validation and
weighted/unweighted accuracy reporting.
"""

from .acoustic import AcousticLstmClassifier, acoustic_preset, load_feature_csv
from .data import (
    Corpus,
    FoldPlan,
    Utterance,
    balance_classes,
    load_corpus,
    load_features,
    make_folds,
    save_corpus,
)
from .evector import EvectorVectorizer, evector_of, fit_word_weights
from .exceptions import (
    ConfigError,
    CoverageError,
    DegenerateDataError,
    EmofusionError,
    EmptySequenceError,
    FormatError,
    NumericError,
    PreconditionError,
    ShapeError,
    UndefinedMetricError,
)
from .fusion import ScoreSet, concat_scores, run_fusion_experiment
from .mcnn import McnnClassifier, McnnConfig, McnnModel, mcnn_preset
from .metrics import ResultRow, confusion, format_results_table, recall_per_class, ua, wa
from .objective import (
    PairBatch,
    batch_objective,
    cosine_gap,
    pair_similarity,
    verification_loss,
)
from .svm import LinearSvmClassifier
from .synth import SynthSpec, synth_corpus, synth_preset, write_synth_corpus
from .text import Vocabulary, kernel_schedule, tokenize

__version__ = "0.1.0"

__all__ = [
    "AcousticLstmClassifier",
    "ConfigError",
    "Corpus",
    "CoverageError",
    "DegenerateDataError",
    "EmofusionError",
    "EmptySequenceError",
    "EvectorVectorizer",
    "FoldPlan",
    "FormatError",
    "LinearSvmClassifier",
    "McnnClassifier",
    "McnnConfig",
    "McnnModel",
    "NumericError",
    "PairBatch",
    "PreconditionError",
    "ResultRow",
    "ScoreSet",
    "ShapeError",
    "SynthSpec",
    "UndefinedMetricError",
    "Utterance",
    "Vocabulary",
    "acoustic_preset",
    "balance_classes",
    "batch_objective",
    "concat_scores",
    "confusion",
    "cosine_gap",
    "evector_of",
    "fit_word_weights",
    "format_results_table",
    "kernel_schedule",
    "load_corpus",
    "load_feature_csv",
    "load_features",
    "make_folds",
    "mcnn_preset",
    "pair_similarity",
    "recall_per_class",
    "run_fusion_experiment",
    "save_corpus",
    "synth_corpus",
    "synth_preset",
    "tokenize",
    "ua",
    "verification_loss",
    "wa",
    "write_synth_corpus",
]
