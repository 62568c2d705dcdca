"""Symmetric InfoNCE over a batch of paired embeddings.

For anchors ``A`` and targets ``T`` (both B x d) the logits are
``S = A T^T / tau`` with the diagonal as positives. The loss is the mean of
the row-wise (anchor -> target) and column-wise (target -> anchor)
cross-entropies, each averaged over the batch. The tri-modal objective sums
two such terms: points against images and points against texts.

The numpy functions are the reference used by tests and tooling; the torch
function is what the training loop differentiates.
"""

from typing import Tuple

import numpy as np
import torch
import torch.nn.functional as F

from utils.errors import InvalidInputError


def _check(anchor: np.ndarray, target: np.ndarray, temperature: float) -> Tuple[np.ndarray, np.ndarray]:
    if not temperature > 0.0:
        raise InvalidInputError(f"temperature must be positive, got {temperature}")
    a = np.asarray(anchor, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    if a.ndim != 2 or a.shape != t.shape:
        raise InvalidInputError(f"anchor {a.shape} and target {t.shape} must be matching B x d arrays")
    if a.shape[0] == 0:
        raise InvalidInputError("batch must not be empty")
    return a, t


def _cross_entropy_rows(logits: np.ndarray) -> np.ndarray:
    """Per-row cross-entropy with the diagonal as the positive class.

    Computed as ``log(sum(exp(s - m))) + (m - s_ii)`` so a constant row gives
    exactly ``log(B)``.
    """
    peak = logits.max(axis=1, keepdims=True)
    lse = np.log(np.exp(logits - peak).sum(axis=1))
    return lse + (peak[:, 0] - np.diag(logits))


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = np.exp(logits - logits.max(axis=1, keepdims=True))
    return shifted / shifted.sum(axis=1, keepdims=True)


def similarity_loss(logits: np.ndarray) -> float:
    """Symmetric InfoNCE given the logit matrix directly."""
    s = np.asarray(logits, dtype=np.float64)
    if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] == 0:
        raise InvalidInputError(f"logits must be a non-empty square matrix, got {s.shape}")
    return float(0.5 * (_cross_entropy_rows(s).mean() + _cross_entropy_rows(s.T).mean()))


def infonce_symmetric(anchor: np.ndarray, target: np.ndarray, temperature: float) -> float:
    """
    Symmetric InfoNCE loss.

    Args:
        anchor: B x d embeddings (rows are positives of the same target row).
        target: B x d embeddings.
        temperature: tau > 0.

    Raises:
        InvalidInputError: non-positive temperature or mismatched shapes.
    """
    a, t = _check(anchor, target, temperature)
    return similarity_loss(a @ t.T / temperature)


def infonce_gradient(anchor: np.ndarray, target: np.ndarray, temperature: float) -> np.ndarray:
    """
    Analytic gradient of ``infonce_symmetric`` with respect to the anchor rows.

    ``dL/dS = ((softmax_rows(S) - I) + (softmax_cols(S) - I)) / (2B)`` and
    ``dL/dA = dL/dS . T / tau``.
    """
    a, t = _check(anchor, target, temperature)
    batch = a.shape[0]
    logits = a @ t.T / temperature
    eye = np.eye(batch)
    rows = _softmax_rows(logits) - eye
    cols = _softmax_rows(logits.T).T - eye
    d_logits = (rows + cols) / (2.0 * batch)
    return d_logits @ t / temperature


def tri_modal_loss(points: np.ndarray, images: np.ndarray, texts: np.ndarray, temperature: float) -> float:
    """Points-to-image plus points-to-text alignment."""
    return infonce_symmetric(points, images, temperature) + infonce_symmetric(points, texts, temperature)


def tri_modal_gradient(points: np.ndarray, images: np.ndarray, texts: np.ndarray, temperature: float) -> np.ndarray:
    return infonce_gradient(points, images, temperature) + infonce_gradient(points, texts, temperature)


def infonce_torch(anchor: torch.Tensor, target: torch.Tensor, temperature: float) -> torch.Tensor:
    """Differentiable twin of ``infonce_symmetric``."""
    if not temperature > 0.0:
        raise InvalidInputError(f"temperature must be positive, got {temperature}")
    logits = anchor @ target.T / temperature
    labels = torch.arange(logits.shape[0], device=logits.device)
    return 0.5 * (F.cross_entropy(logits, labels) + F.cross_entropy(logits.T, labels))
