"""Triplet dataset directories.

Layout::

    <dataset>/manifest.json   TripletManifest (JSON)
    <dataset>/records.bin     8-byte magic ``MXTRIP01`` then records

Each record is ``u32 payload_length | u32 crc32(payload) | payload``, all
little-endian. The payload is:

===========  ==========================================================
field        encoding
===========  ==========================================================
domain       u8 (0 synthetic, 1 outdoor)
ref. time    f64 seconds
instance_id  u16 length + UTF-8
label        u16 length + UTF-8
image_ref    u16 length + UTF-8
caption      u32 length + UTF-8
points       u32 count + count x 3 float32 (x, y, z)
crop         u8 flag; if 1: u16-prefixed instance id, u32 camera,
             f64 timestamp, 4 x f64 AABB (u_min, v_min, u_max, v_max),
             f64 visibility
pixels       u8 flag; if 1: u16 height, u16 width, u8 channels, bytes
===========  ==========================================================

Writers take an exclusive ``.lock`` file and publish both files by atomic
rename; readers never lock.
"""

import json
import os
import struct
import zlib
from collections import defaultdict
from typing import Dict, Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, ValidationError

from core.projection.camera_projection import CropCandidate
from core.triplets.triplet import Domain, Triplet
from utils.errors import DataFormatError
from utils.logger import get_logger

logger = get_logger(__name__)

MAGIC = b"MXTRIP01"
RECORDS_NAME = "records.bin"
MANIFEST_NAME = "manifest.json"
LOCK_NAME = ".lock"
_HEADER = struct.Struct("<II")
_DOMAIN_CODES = {Domain.SYNTHETIC: 0, Domain.OUTDOOR: 1}
_CODE_DOMAINS = {code: domain for domain, code in _DOMAIN_CODES.items()}


class TripletManifest(BaseModel):
    """Dataset summary; counts are authoritative and verified on read."""

    model_config = ConfigDict(extra="forbid")

    kind: Literal["mixalign-triplets"] = "mixalign-triplets"
    version: int = 1
    name: str
    total: int
    counts: Dict[str, Dict[str, int]]
    files: List[str]
    config_hash: str

    def count(self, domain: Optional[Domain] = None) -> int:
        if domain is None:
            return self.total
        return sum(self.counts.get(domain.value, {}).values())


def _count(triplets: Sequence[Triplet]) -> Dict[str, Dict[str, int]]:
    counts: Dict[str, Dict[str, int]] = defaultdict(dict)
    for triplet in triplets:
        per_class = counts[triplet.domain.value]
        per_class[triplet.label] = per_class.get(triplet.label, 0) + 1
    return {domain: dict(sorted(per_class.items())) for domain, per_class in sorted(counts.items())}


def _pack_text(text: str, wide: bool = False) -> bytes:
    raw = text.encode("utf-8")
    return struct.pack("<I" if wide else "<H", len(raw)) + raw


def encode_triplet(triplet: Triplet) -> bytes:
    parts = [
        struct.pack("<Bd", _DOMAIN_CODES[triplet.domain], triplet.reference_time),
        _pack_text(triplet.instance_id),
        _pack_text(triplet.label),
        _pack_text(triplet.image_ref),
        _pack_text(triplet.caption, wide=True),
        struct.pack("<I", len(triplet.points)),
        triplet.points.astype("<f4").tobytes(),
    ]
    crop = triplet.crop
    if crop is None:
        parts.append(b"\x00")
    else:
        parts.append(b"\x01")
        parts.append(_pack_text(crop.instance_id))
        parts.append(struct.pack(
            "<Id4dd", crop.camera_index, crop.timestamp,
            crop.u_min, crop.v_min, crop.u_max, crop.v_max, crop.visibility,
        ))
    if triplet.pixels is None:
        parts.append(b"\x00")
    else:
        height, width, channels = triplet.pixels.shape
        parts.append(struct.pack("<BHHB", 1, height, width, channels))
        parts.append(triplet.pixels.tobytes())
    return b"".join(parts)


class _Cursor:
    def __init__(self, payload: bytes):
        self.payload = payload
        self.pos = 0

    def take(self, fmt: str):
        values = struct.unpack_from(fmt, self.payload, self.pos)
        self.pos += struct.calcsize(fmt)
        return values

    def raw(self, size: int) -> bytes:
        if self.pos + size > len(self.payload):
            raise struct.error("payload too short")
        chunk = self.payload[self.pos:self.pos + size]
        self.pos += size
        return chunk

    def text(self, wide: bool = False) -> str:
        (size,) = self.take("<I" if wide else "<H")
        return self.raw(size).decode("utf-8")


def decode_triplet(payload: bytes) -> Triplet:
    cursor = _Cursor(payload)
    code, reference_time = cursor.take("<Bd")
    if code not in _CODE_DOMAINS:
        raise ValueError(f"unknown domain code {code}")
    instance_id = cursor.text()
    label = cursor.text()
    image_ref = cursor.text()
    caption = cursor.text(wide=True)
    (count,) = cursor.take("<I")
    points = np.frombuffer(cursor.raw(12 * count), dtype="<f4").reshape(count, 3)
    crop = None
    (has_crop,) = cursor.take("<B")
    if has_crop:
        crop_instance = cursor.text()
        camera, timestamp, u_min, v_min, u_max, v_max, visibility = cursor.take("<Id4dd")
        crop = CropCandidate(crop_instance, camera, timestamp, u_min, v_min, u_max, v_max, visibility)
    pixels = None
    (has_pixels,) = cursor.take("<B")
    if has_pixels:
        height, width, channels = cursor.take("<HHB")
        pixels = np.frombuffer(cursor.raw(height * width * channels), dtype=np.uint8).reshape(height, width, channels)
    if cursor.pos != len(payload):
        raise ValueError("trailing bytes in record")
    return Triplet(instance_id, reference_time, points, image_ref, caption, _CODE_DOMAINS[code], label, crop, pixels)


def write_dataset(triplets: Sequence[Triplet], path: str, name: str = "dataset", config_hash: str = "") -> TripletManifest:
    """
    Write triplets to a dataset directory.

    Raises:
        FileExistsError: another writer holds the dataset lock.
    """
    os.makedirs(path, exist_ok=True)
    lock_path = os.path.join(path, LOCK_NAME)
    lock = os.open(lock_path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    try:
        records_tmp = os.path.join(path, RECORDS_NAME + ".tmp")
        with open(records_tmp, "wb") as handle:
            handle.write(MAGIC)
            for triplet in triplets:
                payload = encode_triplet(triplet)
                handle.write(_HEADER.pack(len(payload), zlib.crc32(payload)))
                handle.write(payload)
        manifest = TripletManifest(
            name=name,
            total=len(triplets),
            counts=_count(triplets),
            files=[RECORDS_NAME],
            config_hash=config_hash,
        )
        manifest_tmp = os.path.join(path, MANIFEST_NAME + ".tmp")
        with open(manifest_tmp, "w", encoding="utf-8") as handle:
            json.dump(manifest.model_dump(mode="json"), handle, indent=1, sort_keys=True)
        os.replace(records_tmp, os.path.join(path, RECORDS_NAME))
        os.replace(manifest_tmp, os.path.join(path, MANIFEST_NAME))
    finally:
        os.close(lock)
        os.remove(lock_path)
    logger.info("dataset written", extra={"fields": {"path": path, "total": manifest.total, "config_hash": config_hash}})
    return manifest


def read_manifest(path: str) -> TripletManifest:
    manifest_path = os.path.join(path, MANIFEST_NAME)
    with open(manifest_path, "r", encoding="utf-8") as handle:
        try:
            values = json.load(handle)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{manifest_path} is not valid JSON", exc.pos) from exc
    try:
        return TripletManifest.model_validate(values)
    except ValidationError as exc:
        raise DataFormatError(f"{manifest_path} is not a triplet manifest: {exc.errors()[0]['msg']}") from exc


def iter_records(path: str) -> Iterator[Tuple[int, Triplet]]:
    """Yield (byte offset, triplet) for every record of ``records.bin``."""
    records_path = os.path.join(path, RECORDS_NAME)
    with open(records_path, "rb") as handle:
        blob = handle.read()
    if blob[:len(MAGIC)] != MAGIC:
        raise DataFormatError(f"{records_path} has a bad magic header", 0)
    offset = len(MAGIC)
    while offset < len(blob):
        if offset + _HEADER.size > len(blob):
            raise DataFormatError("truncated record header", offset)
        length, checksum = _HEADER.unpack_from(blob, offset)
        start = offset + _HEADER.size
        if start + length > len(blob):
            raise DataFormatError(f"truncated record (needs {length} payload bytes)", offset)
        payload = blob[start:start + length]
        if zlib.crc32(payload) != checksum:
            raise DataFormatError("record checksum mismatch", offset)
        try:
            triplet = decode_triplet(payload)
        except (struct.error, UnicodeDecodeError, ValueError) as exc:
            raise DataFormatError(f"corrupt record ({exc})", offset) from exc
        yield offset, triplet
        offset = start + length


def read_dataset(path: str) -> List[Triplet]:
    """
    Read every triplet of a dataset and check it against the manifest.

    Raises:
        DataFormatError: corrupt record (with its byte offset) or count
            mismatch (with the offset where the records end).
    """
    manifest = read_manifest(path)
    triplets = [triplet for _, triplet in iter_records(path)]
    end = os.path.getsize(os.path.join(path, RECORDS_NAME))
    counts = _count(triplets)
    if len(triplets) != manifest.total or counts != manifest.counts:
        raise DataFormatError(
            f"manifest of {path} lists {manifest.total} records, found {len(triplets)} "
            f"(counts {counts} vs {manifest.counts}); records end",
            end,
        )
    logger.debug("dataset read", extra={"fields": {"path": path, "total": len(triplets)}})
    return triplets
