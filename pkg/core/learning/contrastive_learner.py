# !/usr/bin/env python3
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

import csv
import os
from dataclasses import dataclass, fields
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import torch
import torch.optim as optim
from tqdm import tqdm

from config.settings import TrainConfig
from core.curriculum import CurriculumSampler, CurriculumSchedule, make_policy, outdoor_count
from core.evaluation.metrics import top1_scores
from core.evaluation.prototypes import build_prototypes, load_templates, rank_classes
from core.learning.encoder import ToyPointEncoder, encode_clouds, prepare_cloud
from core.learning.infonce import infonce_torch
from core.learning.providers import EmbeddingProvider, make_provider
from core.occlusion.hpr import occlude_points
from core.triplets.triplet import Domain, Triplet
from utils.errors import DataFormatError, InvalidInputError, ProviderError
from utils.hashing import config_hash
from utils.logger import get_logger
from utils.rng import make_rng, text_seed

logger = get_logger(__name__)


@dataclass
class EpochMetrics:
    """One row of the training metrics CSV."""

    epoch: int
    mode: str
    ratio: float
    outdoor_per_batch: int
    iterations: int
    loss: float
    lr: float
    synthetic_object_top1: float
    synthetic_class_top1: float
    outdoor_object_top1: float
    outdoor_class_top1: float
    config_hash: str

    def as_row(self) -> Dict[str, str]:
        row = {}
        for column in fields(self):
            value = getattr(self, column.name)
            row[column.name] = repr(value) if isinstance(value, float) else str(value)
        return row


METRIC_COLUMNS = tuple(column.name for column in fields(EpochMetrics))


@dataclass
class _TrainingSet:
    triplets: List[Triplet]
    clouds: torch.Tensor
    images: torch.Tensor
    texts: torch.Tensor

    def __len__(self) -> int:
        return len(self.triplets)


def split_for_eval(triplets: Sequence[Triplet], fraction: float, seed: int) -> Tuple[List[Triplet], List[Triplet]]:
    """
    (train, held-out) split by instance, so every view of an object lands on one side.

    An instance is held out when the hash of ``(seed, instance_id)`` falls in
    the lowest ``fraction`` of the 64-bit range.
    """
    train: List[Triplet] = []
    held: List[Triplet] = []
    for triplet in triplets:
        if text_seed(f"{seed}|{triplet.instance_id}") < fraction * 2.0 ** 64:
            held.append(triplet)
        else:
            train.append(triplet)
    return train, held


def write_metrics_csv(rows: Sequence[EpochMetrics], path: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=METRIC_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row.as_row())


def load_encoder(filepath: str) -> Tuple[ToyPointEncoder, Dict[str, object]]:
    """
    Read parameters written by ``ContrastiveLearner.save_model``.

    Raises:
        OSError: the file cannot be read.
        DataFormatError: the file is not a parameter file.
    """
    try:
        payload = torch.load(filepath, map_location="cpu")
    except OSError:
        raise
    except Exception as e:
        raise DataFormatError(f"cannot read encoder parameters from {filepath}: {e}") from e
    if not isinstance(payload, dict) or "state_dict" not in payload:
        raise DataFormatError(f"{filepath} is not an encoder parameter file")
    encoder = ToyPointEncoder(int(payload["hidden_dim"]), int(payload["embed_dim"]))
    encoder.load_state_dict(payload["state_dict"])
    encoder.eval()
    metadata = {k: v for k, v in payload.items() if k != "state_dict"}
    return encoder, metadata


class ContrastiveLearner:
    """
    Trains the toy point encoder against frozen image and text embeddings.

    Each iteration draws ``devices`` batches from the curriculum sampler,
    back-propagates ``L = L(points, images) + L(points, texts)`` for each, and
    averages the gradients in fixed device order before one SGD step. The
    step size follows a cosine decay over the whole run.

    Args:
        config: Training configuration.
        provider: Frozen embedding provider; built from ``config.provider``
            when omitted.
    """

    def __init__(self, config: TrainConfig, provider: Optional[EmbeddingProvider] = None):
        self.config = config
        self.provider = provider or make_provider(config.provider, config.embed_dim)
        if self.provider.dim != config.embed_dim:
            raise InvalidInputError(f"provider dimension {self.provider.dim} != embed_dim {config.embed_dim}")
        self.encoder = ToyPointEncoder(config.hidden_dim, config.embed_dim, config.seed)
        self.optimizer = optim.SGD(
            self.encoder.parameters(), lr=config.learning_rate, weight_decay=config.weight_decay
        )
        self.config_hash = config_hash(config)
        self.provider_checksum = self.provider.checksum()
        self.history: List[EpochMetrics] = []

    def _prepare(self, triplets: List[Triplet], domain: Domain) -> _TrainingSet:
        dim = self.config.embed_dim
        if not triplets:
            return _TrainingSet([], torch.zeros((0, self.config.max_points, 3), dtype=torch.float64),
                                torch.zeros((0, dim), dtype=torch.float64), torch.zeros((0, dim), dtype=torch.float64))
        clouds = np.stack([
            prepare_cloud(t.points, self.config.max_points, make_rng(self.config.seed, "subsample", domain.value, i))
            for i, t in enumerate(triplets)
        ])
        images = self.provider.embed_images([t.image_ref for t in triplets])
        texts = self.provider.embed_texts([t.caption for t in triplets])
        return _TrainingSet(triplets, torch.from_numpy(clouds), torch.from_numpy(images), torch.from_numpy(texts))

    def _occluded(self, data: _TrainingSet, indices: np.ndarray, *keys) -> torch.Tensor:
        clouds = []
        for position, index in enumerate(indices):
            rng = make_rng(self.config.seed, "occlusion", *keys, position)
            points = occlude_points(data.triplets[int(index)].points, rng, self.config.occlusion_gamma)
            clouds.append(prepare_cloud(points, self.config.max_points, rng))
        if not clouds:
            return data.clouds[:0]
        return torch.from_numpy(np.stack(clouds))

    def _batch_loss(self, batch, synthetic: _TrainingSet, outdoor: _TrainingSet) -> torch.Tensor:
        syn_idx = torch.from_numpy(batch.synthetic.astype(np.int64))
        out_idx = torch.from_numpy(batch.outdoor.astype(np.int64))
        if self.config.occlusion:
            syn_clouds = self._occluded(synthetic, batch.synthetic, batch.epoch, batch.iteration, batch.device)
        else:
            syn_clouds = synthetic.clouds[syn_idx]
        clouds = torch.cat([syn_clouds, outdoor.clouds[out_idx]])
        images = torch.cat([synthetic.images[syn_idx], outdoor.images[out_idx]])
        texts = torch.cat([synthetic.texts[syn_idx], outdoor.texts[out_idx]])
        embeddings = self.encoder(clouds)
        tau = self.config.temperature
        return infonce_torch(embeddings, images, tau) + infonce_torch(embeddings, texts, tau)

    def evaluate(self, synthetic: Sequence[Triplet], outdoor: Sequence[Triplet], classes: Sequence[str]) -> Tuple[float, float, float, float]:
        """Top-1 (object-wise, class-wise) on the synthetic then the outdoor split, with the outdoor prompt.

        Each (instance, reference time) cloud counts once.
        """
        prototypes = build_prototypes(classes, load_templates(), self.provider)
        self.encoder.eval()
        scores = []
        for split in (synthetic, outdoor):
            seen = set()
            distinct = []
            for t in split:
                if (t.instance_id, t.reference_time) not in seen:
                    seen.add((t.instance_id, t.reference_time))
                    distinct.append(t)
            ranked = rank_classes(encode_clouds(self.encoder, [t.points for t in distinct]), prototypes)
            scores.extend(top1_scores(ranked, [t.label for t in distinct]))
        self.encoder.train()
        return tuple(scores)

    def fit(self, synthetic: Sequence[Triplet], outdoor: Sequence[Triplet]) -> List[EpochMetrics]:
        """
        Train for ``total_epochs`` epochs (0 .. T_e - 1) and evaluate after each.

        Args:
            synthetic: Synthetic-domain triplets.
            outdoor: Outdoor-domain triplets.

        Returns:
            One ``EpochMetrics`` per epoch.

        Raises:
            InvalidInputError: no synthetic training triplets remain.
        """
        cfg = self.config
        syn_train, syn_held = split_for_eval(synthetic, cfg.eval_fraction, cfg.seed)
        out_train, out_held = split_for_eval(outdoor, cfg.eval_fraction, cfg.seed)
        excluded = set(cfg.exclude_classes)
        if excluded:
            syn_train = [t for t in syn_train if t.label not in excluded]
            out_train = [t for t in out_train if t.label not in excluded]
        if not syn_train:
            raise InvalidInputError("synthetic training set is empty")
        classes = sorted({t.label for t in list(synthetic) + list(outdoor)})

        schedule = CurriculumSchedule(
            warmup_epochs=cfg.warmup_epochs, total_epochs=cfg.total_epochs, max_ratio=cfg.max_ratio,
            coverage=cfg.coverage, batch_size=cfg.batch_size, devices=cfg.devices, synthetic_size=len(syn_train),
        )
        policy = make_policy(cfg.mode, schedule, cfg.static_ratio, cfg.switch_epoch)
        sampler = CurriculumSampler(schedule, policy, len(out_train), cfg.seed)
        lr_schedule = optim.lr_scheduler.CosineAnnealingLR(
            self.optimizer, T_max=cfg.total_epochs * sampler.iterations
        )
        syn_data = self._prepare(syn_train, Domain.SYNTHETIC)
        out_data = self._prepare(out_train, Domain.OUTDOOR)
        logger.info(
            "training started",
            extra={"fields": {
                "mode": cfg.mode, "synthetic_train": len(syn_train), "outdoor_train": len(out_train),
                "synthetic_eval": len(syn_held), "outdoor_eval": len(out_held),
                "iterations": sampler.iterations, "config_hash": self.config_hash,
            }},
        )

        threads = torch.get_num_threads()
        torch.set_num_threads(1)
        try:
            for epoch in tqdm(range(cfg.total_epochs), desc=f"[{cfg.mode}] epochs", disable=not cfg.progress):
                ratio = policy.ratio(epoch)
                lr = float(self.optimizer.param_groups[0]["lr"])
                losses = []
                for iteration in range(sampler.iterations):
                    self.optimizer.zero_grad()
                    total = 0.0
                    for device in range(cfg.devices):
                        loss = self._batch_loss(sampler.batch(epoch, iteration, device), syn_data, out_data)
                        (loss / cfg.devices).backward()
                        total += float(loss.item())
                    self.optimizer.step()
                    lr_schedule.step()
                    losses.append(total / cfg.devices)
                so, sc, oo, oc = self.evaluate(syn_held, out_held, classes)
                row = EpochMetrics(
                    epoch, cfg.mode, float(ratio), outdoor_count(ratio, cfg.batch_size), sampler.iterations,
                    float(np.mean(losses)), lr, so, sc, oo, oc, self.config_hash,
                )
                self.history.append(row)
                logger.info("epoch finished", extra={"fields": row.as_row()})
        finally:
            torch.set_num_threads(threads)

        if self.provider.checksum() != self.provider_checksum:
            raise ProviderError("embedding provider changed during training")
        return self.history

    def save_model(self, filepath: str) -> None:
        """
        Saves the encoder parameters with their dimensions and config hash.

        Raises:
            OSError: the file cannot be written.
        """
        os.makedirs(os.path.dirname(filepath) or ".", exist_ok=True)
        try:
            torch.save({
                "state_dict": self.encoder.state_dict(),
                "hidden_dim": self.config.hidden_dim,
                "embed_dim": self.config.embed_dim,
                "config_hash": self.config_hash,
                "provider_checksum": self.provider_checksum,
            }, filepath)
            logger.info("encoder saved", extra={"fields": {"path": filepath}})
        except OSError as e:
            logger.error("saving encoder failed", extra={"fields": {"path": filepath, "error": str(e)}})
            raise

    def load_model(self, filepath: str) -> None:
        encoder, metadata = load_encoder(filepath)
        if encoder.embed_dim != self.config.embed_dim or encoder.hidden_dim != self.config.hidden_dim:
            raise InvalidInputError(f"{filepath} holds a {encoder} but the config asks for other dimensions")
        self.encoder.load_state_dict(encoder.state_dict())
        logger.info("encoder loaded", extra={"fields": {"path": filepath, "config_hash": metadata.get("config_hash")}})

    def __str__(self) -> str:
        return f"ContrastiveLearner (mode: {self.config.mode}, epochs run: {len(self.history)}, {self.encoder})"


def train(
    config: TrainConfig,
    synthetic: Sequence[Triplet],
    outdoor: Sequence[Triplet],
    provider: Optional[EmbeddingProvider] = None,
) -> ContrastiveLearner:
    """Build a learner, fit it and return it; metrics are in ``learner.history``."""
    learner = ContrastiveLearner(config, provider)
    learner.fit(synthetic, outdoor)
    return learner
