"""Top-k accuracy, object-wise and class-wise."""

from collections import defaultdict
from typing import Dict, Literal, Sequence, Tuple

from utils.errors import InvalidInputError

AccuracyMode = Literal["object", "class"]


def _hits(predictions: Sequence[Sequence[str]], labels: Sequence[str], k: int):
    if k < 1:
        raise InvalidInputError(f"k must be >= 1, got {k}")
    if len(predictions) != len(labels):
        raise InvalidInputError(f"{len(predictions)} predictions for {len(labels)} labels")
    if not labels:
        raise InvalidInputError("accuracy of an empty evaluation set is undefined")
    return [label in list(ranked)[:k] for ranked, label in zip(predictions, labels)]


def per_class_accuracy(predictions: Sequence[Sequence[str]], labels: Sequence[str], k: int = 1) -> Dict[str, float]:
    """Top-k accuracy of every class that has at least one instance, keyed by class."""
    correct: Dict[str, int] = defaultdict(int)
    total: Dict[str, int] = defaultdict(int)
    for hit, label in zip(_hits(predictions, labels, k), labels):
        total[label] += 1
        correct[label] += int(hit)
    return {label: correct[label] / total[label] for label in sorted(total)}


def accuracy(
    predictions: Sequence[Sequence[str]],
    labels: Sequence[str],
    k: int = 1,
    mode: AccuracyMode = "object",
) -> float:
    """
    Top-k accuracy.

    Args:
        predictions: Ranked class names per instance.
        labels: True class per instance.
        k: A prediction counts when the label is among its first ``k`` names.
        mode: ``object`` averages over instances; ``class`` is the unweighted
            mean of per-class accuracies over classes that occur in ``labels``.
    """
    if mode == "object":
        hits = _hits(predictions, labels, k)
        return sum(hits) / len(hits)
    if mode == "class":
        table = per_class_accuracy(predictions, labels, k)
        return sum(table.values()) / len(table)
    raise InvalidInputError(f"unknown accuracy mode {mode!r}")


def top1_scores(predictions: Sequence[Sequence[str]], labels: Sequence[str]) -> Tuple[float, float]:
    """(object-wise, class-wise) top-1; NaN for an empty split."""
    if len(labels) == 0:
        return float("nan"), float("nan")
    return accuracy(predictions, labels, 1, "object"), accuracy(predictions, labels, 1, "class")
