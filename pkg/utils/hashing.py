"""Canonical configuration hashing."""

import hashlib
import json
from typing import Any, Iterable, Mapping

from pydantic import BaseModel

# Keys that never influence an artifact's content.
NON_SEMANTIC_KEYS = frozenset(
    {"threads", "out", "metrics_out", "params_out", "features_out", "plot", "progress", "log_file", "log_level"}
)


def canonical_json(values: Mapping[str, Any]) -> str:
    return json.dumps(values, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(config: Any, exclude: Iterable[str] = NON_SEMANTIC_KEYS) -> str:
    """Return the sha256 hex digest of a configuration.

    Args:
        config: A pydantic model or a plain mapping.
        exclude: Keys left out of the digest (output paths, pool sizes).

    Returns:
        64-character hex digest.
    """
    if isinstance(config, BaseModel):
        values = config.model_dump(mode="json")
    else:
        values = dict(config)
    skipped = set(exclude)
    filtered = {k: v for k, v in values.items() if k not in skipped}
    return hashlib.sha256(canonical_json(filtered).encode("utf-8")).hexdigest()
