"""Toy permutation-invariant point-cloud encoder.

Per-point affine map and ReLU, max-pool over points, linear projection, L2
normalisation. Everything runs in float64 so results are reproducible bit for
bit on one thread.
"""

from typing import Sequence

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from config.constants import DEFAULT_EMBED_DIM, DEFAULT_HIDDEN_DIM
from utils.errors import InvalidInputError
from utils.rng import make_rng


class ToyPointEncoder(nn.Module):
    """
    PointNet-style stand-in for a 3D backbone.

    Args:
        hidden_dim: Width of the per-point features.
        embed_dim: Output dimension; must match the frozen provider.
        seed: Seed of the deterministic weight initialisation.
    """

    def __init__(self, hidden_dim: int = DEFAULT_HIDDEN_DIM, embed_dim: int = DEFAULT_EMBED_DIM, seed: int = 0):
        super().__init__()
        self.hidden_dim = hidden_dim
        self.embed_dim = embed_dim
        self.point_layer = nn.Linear(3, hidden_dim).double()
        self.projection = nn.Linear(hidden_dim, embed_dim).double()
        self.reset_parameters(seed)

    def reset_parameters(self, seed: int) -> None:
        """He-style normal weights and zero biases drawn from a keyed numpy stream."""
        rng = make_rng(seed, "encoder-init")
        with torch.no_grad():
            for layer in (self.point_layer, self.projection):
                fan_in = layer.in_features
                weight = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(layer.out_features, fan_in))
                layer.weight.copy_(torch.from_numpy(weight))
                layer.bias.zero_()

    def forward(self, clouds: torch.Tensor) -> torch.Tensor:
        """
        Args:
            clouds: (B, P, 3) float64 tensor.

        Returns:
            (B, d) unit-norm embeddings.
        """
        features = F.relu(self.point_layer(clouds))
        pooled = features.max(dim=1).values
        return F.normalize(self.projection(pooled), dim=1)

    def __str__(self) -> str:
        return f"ToyPointEncoder(hidden={self.hidden_dim}, embed={self.embed_dim})"


def encode_points(encoder: ToyPointEncoder, cloud: np.ndarray) -> np.ndarray:
    """
    Unit embedding of one cloud of any size.

    Raises:
        InvalidInputError: the cloud is empty.
    """
    pts = np.asarray(cloud, dtype=np.float64).reshape(-1, 3)
    if len(pts) == 0:
        raise InvalidInputError("cannot encode an empty point cloud")
    with torch.no_grad():
        out = encoder(torch.from_numpy(np.ascontiguousarray(pts))[None])
    return out[0].numpy().copy()


def encode_clouds(encoder: ToyPointEncoder, clouds: Sequence[np.ndarray]) -> np.ndarray:
    """Embed clouds one by one; returns an (n, d) array, (0, d) for no clouds."""
    if not clouds:
        return np.zeros((0, encoder.embed_dim))
    return np.stack([encode_points(encoder, cloud) for cloud in clouds])


def prepare_cloud(points: np.ndarray, max_points: int, rng: np.random.Generator) -> np.ndarray:
    """
    Fixed-size copy of a cloud for batching.

    Larger clouds are subsampled without replacement; smaller ones are padded
    by repeating point ``i % n``, which leaves the max-pool unchanged.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    n = len(pts)
    if n == 0:
        raise InvalidInputError("cannot batch an empty point cloud")
    if n > max_points:
        return pts[np.sort(rng.choice(n, size=max_points, replace=False))]
    return pts[np.arange(max_points) % n]
