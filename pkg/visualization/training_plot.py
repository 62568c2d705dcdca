#!/usr/bin/env python3
#
# Copyright (c) 2025 Efekan Salman
#
# MIT License
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.

import os
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from core.learning.contrastive_learner import EpochMetrics  # noqa: E402
from utils.logger import get_logger  # noqa: E402

logger = get_logger(__name__)


def plot_training_curves(rows: Sequence[EpochMetrics], path: str) -> str:
    """
    Plots per-epoch loss and zero-shot accuracies of one training run.

    Args:
        rows: Metrics in epoch order.
        path: Output image file.

    Returns:
        str: The path the figure was written to.
    """
    epochs = [r.epoch for r in rows]
    fig, (loss_ax, acc_ax) = plt.subplots(2, 1, figsize=(12, 8), sharex=True)

    loss_ax.plot(epochs, [r.loss for r in rows], color="black", label="Loss")
    loss_ax.set_ylabel("Loss")
    loss_ax.grid(True)
    ratio_ax = loss_ax.twinx()
    ratio_ax.plot(epochs, [r.ratio for r in rows], color="gray", linestyle="--", label="Outdoor ratio")
    ratio_ax.set_ylabel("Outdoor ratio")
    ratio_ax.set_ylim(0, 1)

    series = {
        "synthetic (object)": ([r.synthetic_object_top1 for r in rows], "blue", "-"),
        "synthetic (class)": ([r.synthetic_class_top1 for r in rows], "blue", ":"),
        "outdoor (object)": ([r.outdoor_object_top1 for r in rows], "green", "-"),
        "outdoor (class)": ([r.outdoor_class_top1 for r in rows], "green", ":"),
    }
    for label, (values, color, style) in series.items():
        acc_ax.plot(epochs, values, label=label, color=color, linestyle=style)
    acc_ax.set_xlabel("Epoch")
    acc_ax.set_ylabel("Top-1 accuracy")
    acc_ax.set_ylim(0, 1)
    acc_ax.legend()
    acc_ax.grid(True)

    mode = rows[0].mode if rows else "run"
    fig.suptitle(f"Training curves ({mode})")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    logger.info("training plot saved", extra={"fields": {"path": path}})
    return path
