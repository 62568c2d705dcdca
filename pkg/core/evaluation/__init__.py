"""Zero-shot classification, accuracy metrics and feature export."""

from core.evaluation.features import FeatureTable, export_features, retrieve, unique_clouds, write_features_csv
from core.evaluation.metrics import accuracy, per_class_accuracy, top1_scores
from core.evaluation.prototypes import ClassPrototypes, build_prototypes, classify, load_templates, rank_classes
from core.evaluation.zeroshot import EvalRow, evaluate_triplets

__all__ = [
    "ClassPrototypes",
    "EvalRow",
    "FeatureTable",
    "accuracy",
    "build_prototypes",
    "classify",
    "evaluate_triplets",
    "export_features",
    "load_templates",
    "per_class_accuracy",
    "rank_classes",
    "retrieve",
    "top1_scores",
    "unique_clouds",
    "write_features_csv",
]
