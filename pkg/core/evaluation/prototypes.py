"""Prompt prototypes and cosine-similarity classification."""

import os
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np

from config.constants import OUTDOOR_PROMPT
from core.learning.providers import EmbeddingProvider
from core.triplets.captions import display_name
from utils.errors import InvalidInputError

TEMPLATE_FILE = os.path.join(os.path.dirname(__file__), "data", "prompt_templates.txt")


@dataclass(frozen=True, eq=False)
class ClassPrototypes:
    """One unit vector per class, rows aligned with ``names``."""

    names: Tuple[str, ...]
    vectors: np.ndarray

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])

    def vector(self, name: str) -> np.ndarray:
        return self.vectors[self.names.index(name)]


def load_templates(path: Optional[str] = None, prompt_set: Literal["single", "full"] = "single") -> Tuple[str, ...]:
    """
    Prompt templates containing one ``{}`` each.

    An explicit file wins; otherwise ``single`` is the outdoor prompt and
    ``full`` is the bundled 64-template list.
    """
    if path is None and prompt_set == "single":
        return (OUTDOOR_PROMPT,)
    with open(path or TEMPLATE_FILE, "r", encoding="utf-8") as handle:
        templates = tuple(line.strip() for line in handle if line.strip())
    if not templates:
        raise InvalidInputError(f"no prompt templates in {path or TEMPLATE_FILE}")
    bad = [t for t in templates if "{}" not in t]
    if bad:
        raise InvalidInputError(f"templates without a '{{}}' slot: {bad[:3]}")
    return templates


def build_prototypes(classes: Sequence[str], templates: Sequence[str], provider: EmbeddingProvider) -> ClassPrototypes:
    """
    Average the embeddings of every filled template per class and re-normalise.

    Raises:
        InvalidInputError: no classes, duplicate classes or no templates.
    """
    names = tuple(classes)
    if not names:
        raise InvalidInputError("cannot build prototypes for an empty class list")
    if len(set(names)) != len(names):
        raise InvalidInputError(f"class names must be unique: {names}")
    if not templates:
        raise InvalidInputError("at least one prompt template is required")
    rows = []
    for name in names:
        mean = provider.embed_texts([t.format(display_name(name)) for t in templates]).mean(axis=0)
        norm = float(np.linalg.norm(mean))
        if norm <= 0.0:
            raise InvalidInputError(f"prompt embeddings for {name!r} cancel out")
        rows.append(mean / norm)
    vectors = np.stack(rows)
    vectors.setflags(write=False)
    return ClassPrototypes(names, vectors)


def classify(embedding: np.ndarray, prototypes: ClassPrototypes) -> List[Tuple[str, float]]:
    """
    Classes ranked by descending cosine similarity, ties broken by name.

    Raises:
        InvalidInputError: dimension mismatch or zero query.
    """
    query = np.asarray(embedding, dtype=np.float64).reshape(-1)
    if query.size != prototypes.dim:
        raise InvalidInputError(f"embedding has dimension {query.size}, prototypes have {prototypes.dim}")
    norm = float(np.linalg.norm(query))
    if norm <= 0.0:
        raise InvalidInputError("cannot classify a zero embedding")
    similarities = prototypes.vectors @ (query / norm)
    ranked = sorted(zip(prototypes.names, similarities.tolist()), key=lambda item: (-item[1], item[0]))
    return [(name, float(score)) for name, score in ranked]


def rank_classes(embeddings: np.ndarray, prototypes: ClassPrototypes) -> List[List[str]]:
    """``classify`` for every row, names only."""
    return [[name for name, _ in classify(row, prototypes)] for row in np.asarray(embeddings)]
