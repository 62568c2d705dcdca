import os
from typing import Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from utils.logger import get_logger  # noqa: E402

logger = get_logger(__name__)


def plot_mixing_schedule(rows: Sequence[Tuple[int, float]], path: str, batch_size: int = 0) -> str:
    """Step plot of the outdoor ratio per epoch; with ``batch_size`` also the outdoor count per batch."""
    epochs = [e for e, _ in rows]
    ratios = [r for _, r in rows]
    plt.figure(figsize=(10, 5))
    plt.step(epochs, ratios, where="post", color="green", label="Outdoor ratio r(e)")
    if batch_size:
        counts = [int(r * batch_size + 0.5) / batch_size for r in ratios]
        plt.step(epochs, counts, where="post", color="gray", linestyle=":", label=f"Rounded share (B={batch_size})")
    plt.xlabel("Epoch")
    plt.ylabel("Outdoor fraction")
    plt.ylim(0, 1)
    plt.title("Mixing schedule")
    plt.legend()
    plt.grid(True)
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    plt.savefig(path)
    plt.close()
    logger.info("schedule plot saved", extra={"fields": {"path": path}})
    return path
