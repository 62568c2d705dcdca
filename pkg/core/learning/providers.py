"""Frozen image/text embedding providers.

A provider maps caption text, crop references and class prompts to unit
d-vectors and never changes during training. ``HashedClassProvider`` gives a
controllable semantic geometry: each class owns an anchor direction and every
input is its class anchor plus a hash-seeded perturbation.
``FileEmbeddingProvider`` serves precomputed vectors (for example from a real
vision-language model) from a binary file:

    header   <II    dimension d, record count
    record   <H     key length in bytes
             bytes  UTF-8 key, ``text:<caption>`` or ``image:<image_ref>``
             <f4*d  vector

Vectors are re-normalised on load.
"""

import hashlib
import struct
from abc import ABC, abstractmethod
from typing import Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np

from config.constants import DEFAULT_EMBED_DIM, DEFAULT_PROVIDER_PERTURBATION, TAXONOMY
from config.settings import ProviderSettings
from core.triplets.captions import display_name
from utils.errors import DataFormatError, InvalidInputError, ProviderError
from utils.logger import get_logger
from utils.rng import make_rng, text_seed

logger = get_logger(__name__)

_HEADER = struct.Struct("<II")
_KEY_LENGTH = struct.Struct("<H")


def _unit(vector: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vector))
    if norm <= 0.0 or not np.isfinite(norm):
        raise ProviderError("embedding has no direction")
    return vector / norm


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


class EmbeddingProvider(ABC):
    """
    Abstract base class for frozen embedding providers.

    Subclasses implement ``embed_text`` and ``embed_image``; both must return
    the same unit vector for the same input on every call.
    """

    dim: int

    @abstractmethod
    def embed_text(self, text: str) -> np.ndarray:
        pass

    @abstractmethod
    def embed_image(self, image_ref: str) -> np.ndarray:
        pass

    @abstractmethod
    def checksum(self) -> str:
        """Digest of every parameter the provider's outputs depend on."""

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim))
        return np.stack([self.embed_text(text) for text in texts])

    def embed_images(self, image_refs: Sequence[str]) -> np.ndarray:
        if not image_refs:
            return np.zeros((0, self.dim))
        return np.stack([self.embed_image(ref) for ref in image_refs])


class HashedClassProvider(EmbeddingProvider):
    """
    Class anchors plus hash-seeded perturbation.

    Anchors are orthonormal when there are no more classes than dimensions.
    A text belongs to the class whose display name it contains (longest
    match wins); an image reference belongs to the class in its
    ``texture:`` tag.

    Args:
        classes: Taxonomy the anchors are built for.
        dim: Embedding dimension.
        seed: Anchor and perturbation seed.
        perturbation: Scale of the per-input noise relative to the anchor.
    """

    def __init__(
        self,
        classes: Iterable[str] = TAXONOMY,
        dim: int = DEFAULT_EMBED_DIM,
        seed: int = 0,
        perturbation: float = DEFAULT_PROVIDER_PERTURBATION,
    ):
        self.classes: Tuple[str, ...] = tuple(sorted(set(classes)))
        if not self.classes:
            raise InvalidInputError("provider needs at least one class")
        if dim < 2:
            raise InvalidInputError(f"embedding dimension must be >= 2, got {dim}")
        self.dim = int(dim)
        self.seed = int(seed)
        self.perturbation = float(perturbation)
        raw = make_rng(self.seed, "anchors").standard_normal((self.dim, len(self.classes)))
        if len(self.classes) <= self.dim:
            basis, _ = np.linalg.qr(raw)
            anchors = basis.T
        else:
            anchors = (raw / np.linalg.norm(raw, axis=0)).T
        self.anchors: Dict[str, np.ndarray] = {
            name: _frozen(np.array(_unit(anchors[i]))) for i, name in enumerate(self.classes)
        }
        self._names = sorted(((display_name(c).lower(), c) for c in self.classes), key=lambda x: (-len(x[0]), x[1]))

    def class_of_text(self, text: str) -> Optional[str]:
        lowered = text.lower()
        for name, category in self._names:
            if name in lowered:
                return category
        return None

    def _perturbed(self, category: Optional[str], kind: str, key: str) -> np.ndarray:
        noise = make_rng(self.seed, kind, text_seed(key)).standard_normal(self.dim)
        if category is None:
            return _frozen(_unit(noise))
        noise = noise / np.sqrt(self.dim)
        return _frozen(_unit(self.anchors[category] + self.perturbation * noise))

    def embed_text(self, text: str) -> np.ndarray:
        return self._perturbed(self.class_of_text(text), "text", text)

    def embed_image(self, image_ref: str) -> np.ndarray:
        head = image_ref.split("|", 1)[0]
        category = head[len("texture:"):] if head.startswith("texture:") else None
        if category is None or category not in self.anchors:
            raise ProviderError(f"image reference {image_ref!r} names no known class")
        return self._perturbed(category, "image", image_ref)

    def checksum(self) -> str:
        digest = hashlib.sha256()
        digest.update(repr((self.classes, self.dim, self.seed, self.perturbation)).encode("utf-8"))
        for name in self.classes:
            digest.update(self.anchors[name].tobytes())
        return digest.hexdigest()

    def __str__(self) -> str:
        return f"HashedClassProvider(classes={len(self.classes)}, dim={self.dim}, seed={self.seed})"


class FileEmbeddingProvider(EmbeddingProvider):
    """Lookup table read from a provider file; unknown keys raise ``ProviderError``."""

    def __init__(self, path: str):
        self.path = path
        self.dim, self.table = read_provider_file(path)

    def _lookup(self, key: str) -> np.ndarray:
        try:
            return self.table[key]
        except KeyError:
            raise ProviderError(f"no embedding for {key!r} in {self.path}") from None

    def embed_text(self, text: str) -> np.ndarray:
        return self._lookup(f"text:{text}")

    def embed_image(self, image_ref: str) -> np.ndarray:
        return self._lookup(f"image:{image_ref}")

    def checksum(self) -> str:
        digest = hashlib.sha256()
        for key in sorted(self.table):
            digest.update(key.encode("utf-8"))
            digest.update(self.table[key].tobytes())
        return digest.hexdigest()


def read_provider_file(path: str) -> Tuple[int, Dict[str, np.ndarray]]:
    """
    Parse a provider file.

    Raises:
        DataFormatError: truncated header or record, bad UTF-8, zero vector or
            duplicate key; the byte offset of the failing record is reported.
    """
    with open(path, "rb") as handle:
        data = handle.read()
    if len(data) < _HEADER.size:
        raise DataFormatError("provider file header truncated", 0)
    dim, count = _HEADER.unpack_from(data, 0)
    if dim < 1:
        raise DataFormatError("provider dimension must be positive", 0)
    vector_bytes = 4 * dim
    table: Dict[str, np.ndarray] = {}
    offset = _HEADER.size
    for _ in range(count):
        start = offset
        if offset + _KEY_LENGTH.size > len(data):
            raise DataFormatError("provider record truncated", start)
        (length,) = _KEY_LENGTH.unpack_from(data, offset)
        offset += _KEY_LENGTH.size
        if offset + length + vector_bytes > len(data):
            raise DataFormatError("provider record truncated", start)
        try:
            key = data[offset:offset + length].decode("utf-8")
        except UnicodeDecodeError:
            raise DataFormatError("provider key is not UTF-8", start) from None
        offset += length
        vector = np.frombuffer(data, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        offset += vector_bytes
        if key in table:
            raise DataFormatError(f"duplicate provider key {key!r}", start)
        try:
            table[key] = _frozen(_unit(vector))
        except ProviderError:
            raise DataFormatError(f"zero vector for provider key {key!r}", start) from None
    if offset != len(data):
        raise DataFormatError("trailing bytes after the last provider record", offset)
    logger.info("provider file loaded", extra={"fields": {"path": path, "dim": dim, "records": count}})
    return dim, table


def write_provider_file(path: str, dim: int, entries: Mapping[str, np.ndarray]) -> None:
    """Write ``entries`` (key -> d-vector) in provider file format, keys sorted."""
    with open(path, "wb") as handle:
        handle.write(_HEADER.pack(dim, len(entries)))
        for key in sorted(entries):
            encoded = key.encode("utf-8")
            vector = np.asarray(entries[key], dtype="<f4").reshape(-1)
            if vector.size != dim:
                raise InvalidInputError(f"vector for {key!r} has {vector.size} values, expected {dim}")
            handle.write(_KEY_LENGTH.pack(len(encoded)))
            handle.write(encoded)
            handle.write(vector.tobytes())


def make_provider(settings: ProviderSettings, dim: int) -> EmbeddingProvider:
    """Provider described by run settings; a file provider must match ``dim``."""
    if settings.path:
        provider = FileEmbeddingProvider(settings.path)
        if provider.dim != dim:
            raise InvalidInputError(f"provider dimension {provider.dim} does not match encoder dimension {dim}")
        return provider
    return HashedClassProvider(settings.classes, dim, settings.seed, settings.perturbation)
