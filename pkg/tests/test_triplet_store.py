"""Tests for triplet assembly, captions, the dataset format and the pipeline."""

import json
import os

import numpy as np
import pytest

from config.settings import SceneConfig, TripletConfig
from core.evaluation.features import unique_clouds
from core.fusion.sweep_fusion import FusedObjectCloud
from core.learning.contrastive_learner import split_for_eval
from core.projection.camera_projection import CropCandidate
from core.triplets.adapter import SimulatedSceneAdapter
from core.triplets.assembler import assemble_triplets
from core.triplets.captions import (
    caption_filename,
    load_captions,
    parse_caption_filename,
    write_template_captions,
)
from core.triplets.pipeline import generate_from_adapter, generate_triplets, namespace_triplets
from core.triplets.store import (
    LOCK_NAME,
    MAGIC,
    RECORDS_NAME,
    read_dataset,
    read_manifest,
    write_dataset,
)
from core.triplets.triplet import Domain, Triplet
from environment.scene_io import write_scene
from environment.simulator import generate_scene
from utils.errors import DataFormatError, InvalidInputError
from utils.rng import make_rng

from conftest import make_triplet


def crop(camera_index, t=0.5):
    return CropCandidate("car_1", camera_index, t, 10.0, 20.0, 30.0, 40.0, 0.9)


@pytest.fixture
def cloud():
    points = make_rng(0, "cloud").normal(size=(200, 3))
    return FusedObjectCloud("car_1", 0.5, points, 10, category="car")


def mixed_triplets(count):
    rng = make_rng(11, "mixed")
    triplets = []
    for i in range(count):
        outdoor = i % 3 == 0
        label = ("car", "truck", "pedestrian", "barrier")[i % 4]
        triplets.append(Triplet(
            instance_id=f"inst_{i:05d}",
            reference_time=0.05 * i if outdoor else 0.0,
            points=rng.normal(size=(int(rng.integers(1, 40)), 3)),
            image_ref=f"texture:{label}|crop:{i}",
            caption=f"a {label} été #{i}",
            domain=Domain.OUTDOOR if outdoor else Domain.SYNTHETIC,
            label=label,
            crop=CropCandidate(f"inst_{i:05d}", i % 6, 0.05 * i, 1.0, 2.0, 3.5, 4.5, 0.5) if outdoor else None,
            pixels=rng.integers(0, 256, size=(3, 4, 3)) if i % 7 == 0 else None,
        ))
    return triplets


class TestTriplet:
    """Triplet invariants."""

    def test_empty_points_rejected(self):
        """A triplet needs at least one point."""
        with pytest.raises(InvalidInputError):
            make_triplet(points=np.zeros((0, 3)))

    def test_blank_caption_rejected(self):
        """Captions must contain text."""
        with pytest.raises(InvalidInputError):
            Triplet("a", 0.0, np.ones((1, 3)), "ref", "   ", Domain.SYNTHETIC, "car")

    def test_image_class(self):
        """The texture tag names the depicted class."""
        assert make_triplet(label="truck").image_class == "truck"
        assert Triplet("a", 0.0, np.ones((1, 3)), "render:x", "c", "outdoor", "car").image_class is None


class TestAssembleTriplets:
    """Cloud/crop/caption pairing."""

    def test_one_triplet_per_captioned_crop(self, cloud):
        """Three crops with three captions give three triplets."""
        crops = [crop(0), crop(1), crop(2)]
        captions = {c.key: f"a car seen by camera {c.camera_index}" for c in crops}
        triplets = assemble_triplets(cloud, crops, captions)
        assert len(triplets) == 3
        assert all(t.domain is Domain.OUTDOOR and t.label == "car" for t in triplets)
        assert all(np.array_equal(t.points, cloud.points.astype(np.float32)) for t in triplets)
        assert [t.crop for t in triplets] == crops

    def test_no_crops(self, cloud):
        """No crops give no triplets."""
        assert assemble_triplets(cloud, [], {}) == []

    def test_missing_caption_skipped(self, cloud):
        """A crop without a caption is skipped."""
        crops = [crop(0), crop(1)]
        triplets = assemble_triplets(cloud, crops, {crops[1].key: "a car"})
        assert len(triplets) == 1 and triplets[0].crop == crops[1]

    def test_label_override(self, cloud):
        """A mapped label replaces the raw category."""
        triplets = assemble_triplets(cloud, [crop(0)], {crop(0).key: "a car"}, label="vehicle")
        assert triplets[0].label == "vehicle"
        assert triplets[0].image_class == "car"


class TestCaptions:
    """Caption sidecar files."""

    def test_filename_round_trip(self):
        """Names encode (instance, camera, microseconds)."""
        key = ("inst__0001", 3, 1500000)
        assert parse_caption_filename(caption_filename(key)) == key

    def test_foreign_names_ignored(self, tmp_path):
        """Only well-formed, non-empty caption files load."""
        (tmp_path / caption_filename(("a", 0, 0))).write_text("a car\n", encoding="utf-8")
        (tmp_path / caption_filename(("b", 1, 5))).write_text("\n", encoding="utf-8")
        (tmp_path / "notes.txt").write_text("hello", encoding="utf-8")
        assert load_captions(str(tmp_path)) == {("a", 0, 0): "a car"}

    def test_missing_directory(self, tmp_path):
        """A missing directory yields no captions."""
        assert load_captions(str(tmp_path / "absent")) == {}

    def test_template_captions_cover_every_crop(self, front_car, tmp_path):
        """The simulator captions every valid crop."""
        written = write_template_captions(front_car.scene, str(tmp_path))
        captions = load_captions(str(tmp_path))
        assert written == len(captions) > 0
        assert all("car" in text for text in captions.values())


class TestDatasetFormat:
    """Dataset directories."""

    def test_empty_round_trip(self, tmp_path):
        """An empty dataset reads back empty."""
        manifest = write_dataset([], str(tmp_path), "empty")
        assert manifest.total == 0 and manifest.counts == {}
        assert read_dataset(str(tmp_path)) == []

    def test_mixed_round_trip(self, tmp_path):
        """A thousand mixed-domain triplets round-trip field for field."""
        triplets = mixed_triplets(1000)
        write_dataset(triplets, str(tmp_path), "mixed", "cafe")
        loaded = read_dataset(str(tmp_path))
        assert len(loaded) == len(triplets)
        assert all(a.same_as(b) for a, b in zip(triplets, loaded))

    def test_manifest_counts(self, tmp_path):
        """Manifest counts match the records per domain and class."""
        triplets = mixed_triplets(40)
        manifest = write_dataset(triplets, str(tmp_path), "mixed", "beef")
        reread = read_manifest(str(tmp_path))
        assert reread == manifest
        assert reread.total == 40
        assert reread.count(Domain.OUTDOOR) == sum(t.domain is Domain.OUTDOOR for t in triplets)
        assert reread.counts["synthetic"]["car"] == sum(
            t.domain is Domain.SYNTHETIC and t.label == "car" for t in triplets
        )
        assert reread.config_hash == "beef"

    def test_truncated_file(self, tmp_path):
        """A cut record reports the offset of its header."""
        write_dataset(mixed_triplets(3), str(tmp_path))
        path = os.path.join(str(tmp_path), RECORDS_NAME)
        with open(path, "rb") as handle:
            blob = handle.read()
        first_length = int.from_bytes(blob[len(MAGIC):len(MAGIC) + 4], "little")
        second = len(MAGIC) + 8 + first_length
        with open(path, "wb") as handle:
            handle.write(blob[:second + 10])
        with pytest.raises(DataFormatError) as info:
            read_dataset(str(tmp_path))
        assert info.value.offset == second

    def test_checksum_mismatch(self, tmp_path):
        """A flipped payload byte fails the CRC at the record offset."""
        write_dataset(mixed_triplets(2), str(tmp_path))
        path = os.path.join(str(tmp_path), RECORDS_NAME)
        with open(path, "r+b") as handle:
            handle.seek(len(MAGIC) + 8 + 3)
            byte = handle.read(1)
            handle.seek(len(MAGIC) + 8 + 3)
            handle.write(bytes([byte[0] ^ 0xFF]))
        with pytest.raises(DataFormatError) as info:
            read_dataset(str(tmp_path))
        assert info.value.offset == len(MAGIC)

    def test_bad_magic(self, tmp_path):
        """The records file must start with the magic bytes."""
        write_dataset([], str(tmp_path))
        with open(os.path.join(str(tmp_path), RECORDS_NAME), "wb") as handle:
            handle.write(b"NOTMAGIC")
        with pytest.raises(DataFormatError) as info:
            read_dataset(str(tmp_path))
        assert info.value.offset == 0

    def test_count_mismatch(self, tmp_path):
        """A manifest that disagrees with the records is rejected."""
        write_dataset(mixed_triplets(4), str(tmp_path))
        manifest_path = os.path.join(str(tmp_path), "manifest.json")
        with open(manifest_path, "r", encoding="utf-8") as handle:
            values = json.load(handle)
        values["total"] = 5
        with open(manifest_path, "w", encoding="utf-8") as handle:
            json.dump(values, handle)
        with pytest.raises(DataFormatError):
            read_dataset(str(tmp_path))

    def test_cut_at_record_boundary(self, tmp_path):
        """Losing whole trailing records reports where the surviving records end."""
        write_dataset(mixed_triplets(3), str(tmp_path))
        path = os.path.join(str(tmp_path), RECORDS_NAME)
        with open(path, "rb") as handle:
            blob = handle.read()
        first_length = int.from_bytes(blob[len(MAGIC):len(MAGIC) + 4], "little")
        boundary = len(MAGIC) + 8 + first_length
        with open(path, "wb") as handle:
            handle.write(blob[:boundary])
        with pytest.raises(DataFormatError) as info:
            read_dataset(str(tmp_path))
        assert info.value.offset == boundary
        assert f"offset {boundary}" in str(info.value)

    def test_writer_lock_is_exclusive(self, tmp_path):
        """A held lock blocks a second writer and leaves the lock in place."""
        (tmp_path / LOCK_NAME).write_bytes(b"")
        with pytest.raises(FileExistsError):
            write_dataset(mixed_triplets(1), str(tmp_path))
        assert (tmp_path / LOCK_NAME).exists()
        assert not (tmp_path / RECORDS_NAME).exists()

    def test_lock_released_after_write(self, tmp_path):
        """A finished writer removes its lock."""
        write_dataset(mixed_triplets(1), str(tmp_path))
        assert not (tmp_path / LOCK_NAME).exists()


class TestPipeline:
    """Scene to outdoor triplets."""

    def test_front_car_triplets(self, front_car, tmp_path):
        """A dense parked car yields triplets at its keyframes."""
        write_template_captions(front_car.scene, str(tmp_path))
        triplets, stats = generate_triplets(front_car.scene, load_captions(str(tmp_path)), TripletConfig(min_points=150))
        assert stats.candidates == 3
        assert stats.clouds >= 1
        assert stats.triplets == len(triplets) > 0
        assert all(t.domain is Domain.OUTDOOR and t.label == "car" for t in triplets)
        assert all(t.point_count >= 150 for t in triplets)

    def test_sparse_clouds_dropped(self, front_car):
        """An unreachable threshold drops every cloud."""
        triplets, stats = generate_triplets(front_car.scene, {}, TripletConfig(min_points=10**7))
        assert triplets == [] and stats.sparse == stats.candidates

    def test_range_filter(self, front_car):
        """Per-class detection ranges drop distant instances."""
        config = TripletConfig(min_points=0, range_filter=True, detection_ranges={"car": 5.0})
        _, stats = generate_triplets(front_car.scene, {}, config)
        assert stats.out_of_range == stats.candidates

    def test_class_map(self, front_car, tmp_path):
        """Raw categories can be mapped to another label."""
        write_template_captions(front_car.scene, str(tmp_path))
        config = TripletConfig(min_points=0, class_map={"car": "vehicle"})
        triplets, _ = generate_triplets(front_car.scene, load_captions(str(tmp_path)), config)
        assert triplets and all(t.label == "vehicle" for t in triplets)

    def test_pixels_stored_on_request(self, front_car, tmp_path):
        """Crop buffers are attached when asked for."""
        write_template_captions(front_car.scene, str(tmp_path))
        config = TripletConfig(min_points=0, store_pixels=True)
        triplets, _ = generate_triplets(front_car.scene, load_captions(str(tmp_path)), config)
        assert triplets and all(t.pixels is not None and t.pixels.ndim == 3 for t in triplets)

    def test_adapter_matches_direct_call(self, front_car, tmp_path):
        """The simulated-scene adapter feeds the same triplets as a direct call, under the scene's name."""
        scene_dir = tmp_path / "scene"
        write_scene(front_car.scene, str(scene_dir))
        write_template_captions(front_car.scene, str(scene_dir / "captions"))
        config = TripletConfig(min_points=0)
        direct, _ = generate_triplets(front_car.scene, load_captions(str(scene_dir / "captions")), config)
        adapted, stats = generate_from_adapter(SimulatedSceneAdapter([str(scene_dir)]), config)
        assert stats.triplets == len(direct)
        assert all(a.same_as(b) for a, b in zip(namespace_triplets(direct, "scene"), adapted))
        assert all(t.instance_id == "scene/inst_0000" for t in adapted)
        assert all(t.crop.instance_id == "scene/inst_0000" and "scene/inst_0000" in t.image_ref for t in adapted)

    def test_instances_stay_distinct_across_scenes(self, small_scene_config, tmp_path):
        """Two scenes that both number objects from inst_0000 keep every fused cloud apart."""
        paths, expected = [], 0
        config = TripletConfig(min_points=0)
        for name, seed in (("north", 7), ("south", 8)):
            scene = generate_scene(small_scene_config.model_copy(update={"seed": seed})).scene
            path = tmp_path / name
            write_scene(scene, str(path))
            write_template_captions(scene, str(path / "captions"))
            paths.append(str(path))
            direct, _ = generate_triplets(scene, load_captions(str(path / "captions")), config)
            expected += len({(t.instance_id, t.reference_time) for t in direct})
        triplets, _ = generate_from_adapter(SimulatedSceneAdapter(paths), config)
        assert expected > 0
        assert len(unique_clouds(triplets)) == expected
        assert {t.instance_id.split("/")[0] for t in triplets} <= {"north", "south"}
        train, held = split_for_eval(triplets, 0.5, seed=0)
        assert not {t.instance_id for t in train} & {t.instance_id for t in held}

    def test_repeated_scene_names_are_disambiguated(self, front_car, tmp_path):
        """Scenes whose directories share a name still get distinct ids."""
        paths = []
        for parent in ("a", "b"):
            path = tmp_path / parent / "scene"
            write_scene(front_car.scene, str(path))
            write_template_captions(front_car.scene, str(path / "captions"))
            paths.append(str(path))
        triplets, _ = generate_from_adapter(SimulatedSceneAdapter(paths), TripletConfig(min_points=0))
        assert {t.instance_id for t in triplets} == {"scene/inst_0000", "scene~1/inst_0000"}

    def test_empty_scene_gives_empty_dataset(self, tmp_path):
        """A scene without objects produces an empty dataset."""
        scene = generate_scene(SceneConfig(num_objects=0, num_sweeps=3, clutter_points=50)).scene
        triplets, stats = generate_triplets(scene, {}, TripletConfig())
        assert triplets == [] and stats.candidates == 0
        write_dataset(triplets, str(tmp_path))
        assert read_dataset(str(tmp_path)) == []
