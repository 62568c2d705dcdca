"""Contrastive alignment of point clouds with frozen image and text embeddings."""

from core.learning.contrastive_learner import (
    METRIC_COLUMNS,
    ContrastiveLearner,
    EpochMetrics,
    load_encoder,
    split_for_eval,
    train,
    write_metrics_csv,
)
from core.learning.encoder import ToyPointEncoder, encode_clouds, encode_points, prepare_cloud
from core.learning.infonce import infonce_gradient, infonce_symmetric, infonce_torch, similarity_loss
from core.learning.providers import (
    EmbeddingProvider,
    FileEmbeddingProvider,
    HashedClassProvider,
    make_provider,
    read_provider_file,
    write_provider_file,
)

__all__ = [
    "METRIC_COLUMNS",
    "ContrastiveLearner",
    "EmbeddingProvider",
    "EpochMetrics",
    "FileEmbeddingProvider",
    "HashedClassProvider",
    "ToyPointEncoder",
    "encode_clouds",
    "encode_points",
    "infonce_gradient",
    "infonce_symmetric",
    "infonce_torch",
    "load_encoder",
    "make_provider",
    "prepare_cloud",
    "read_provider_file",
    "similarity_loss",
    "split_for_eval",
    "train",
    "write_metrics_csv",
    "write_provider_file",
]
