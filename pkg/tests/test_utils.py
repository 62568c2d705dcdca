"""Tests for seeded streams, config hashing and resolution, logging and error codes."""

import json
import logging

import pytest

from config.settings import ScheduleSettings, TrainConfig, default_threads, load_config_file, resolve_config
from utils.errors import (
    ConfigError,
    DataFormatError,
    InvalidInputError,
    MixAlignError,
    NotVisibleError,
    ProviderError,
    SceneError,
)
from utils.hashing import config_hash
from utils.logger import configure_logging, get_logger
from utils.rng import make_rng, text_seed


class TestRng:
    """Keyed random streams."""

    def test_same_keys_same_stream(self):
        """Equal seed and keys reproduce the draws."""
        assert make_rng(3, "a", 1).integers(0, 1 << 30, 5).tolist() == make_rng(3, "a", 1).integers(0, 1 << 30, 5).tolist()

    def test_keys_separate_streams(self):
        """Different keys or seeds draw different values."""
        base = make_rng(3, "a").random(4).tolist()
        assert make_rng(3, "b").random(4).tolist() != base
        assert make_rng(4, "a").random(4).tolist() != base
        assert make_rng(3).random(4).tolist() != base

    def test_text_seed_is_stable(self):
        """Text seeds are fixed 64-bit integers."""
        assert text_seed("car") == text_seed("car")
        assert 0 <= text_seed("car") < 2 ** 64
        assert text_seed("car") != text_seed("truck")


class TestConfigHash:
    """Canonical config digests."""

    def test_output_paths_do_not_count(self):
        """Output locations and pool sizes leave the hash alone."""
        assert config_hash(TrainConfig(metrics_out="a.csv", threads=4)) == config_hash(TrainConfig())

    def test_semantic_fields_count(self):
        """Changing a semantic setting changes the hash."""
        assert config_hash(TrainConfig(seed=1)) != config_hash(TrainConfig())

    def test_mapping_key_order(self):
        """Mappings hash the same whatever their key order."""
        assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})
        assert len(config_hash({"a": 1})) == 64


class TestResolveConfig:
    """Flag > file > default precedence."""

    def test_precedence(self):
        """Flags beat file values, which beat defaults; None flags fall through."""
        config = resolve_config(
            ScheduleSettings,
            {"total_epochs": 10, "max_ratio": 0.5},
            {"max_ratio": 0.2, "total_epochs": None},
        )
        assert config.total_epochs == 10
        assert config.max_ratio == 0.2
        assert config.warmup_epochs == ScheduleSettings().warmup_epochs

    def test_errors_name_fields(self):
        """Validation errors list every offending field."""
        with pytest.raises(ConfigError) as info:
            resolve_config(ScheduleSettings, {"max_ratio": 2.0, "batch_size": 0})
        assert info.value.fields == ("batch_size", "max_ratio")

    def test_unknown_keys_rejected(self):
        """Misspelled settings are errors, not silently ignored."""
        with pytest.raises(ConfigError):
            resolve_config(ScheduleSettings, {"totl_epochs": 3})

    def test_config_file_sections(self, tmp_path):
        """A matching top-level section is used, otherwise the whole object."""
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"schedule": {"total_epochs": 3}, "seed": 1}), encoding="utf-8")
        assert load_config_file(str(path), "schedule") == {"total_epochs": 3}
        assert load_config_file(str(path), "train")["seed"] == 1
        assert load_config_file(None) == {}

    def test_config_file_must_be_object(self, tmp_path):
        """Non-object JSON is a config error."""
        path = tmp_path / "config.json"
        path.write_text("[1, 2]", encoding="utf-8")
        with pytest.raises(ConfigError):
            load_config_file(str(path))


class TestDefaultThreads:
    """Worker-pool sizing."""

    def test_explicit_value_wins(self, monkeypatch):
        """An explicit count beats the environment."""
        monkeypatch.setenv("MIXALIGN_THREADS", "8")
        assert default_threads(2) == 2

    def test_environment(self, monkeypatch):
        """MIXALIGN_THREADS is used when no count is given."""
        monkeypatch.setenv("MIXALIGN_THREADS", "3")
        assert default_threads() == 3

    def test_default_is_one(self, monkeypatch):
        """Without either the pool has one worker."""
        monkeypatch.delenv("MIXALIGN_THREADS", raising=False)
        assert default_threads() == 1

    def test_bad_environment(self, monkeypatch):
        """A non-integer value is a config error."""
        monkeypatch.setenv("MIXALIGN_THREADS", "many")
        with pytest.raises(ConfigError):
            default_threads()


class TestLogging:
    """JSON line logs."""

    def test_json_lines_with_fields(self, tmp_path):
        """Records are JSON objects carrying their structured fields."""
        path = tmp_path / "run.log"
        configure_logging("INFO", str(path))
        try:
            get_logger("tests.logging").info("hello", extra={"fields": {"answer": 42}})
        finally:
            configure_logging("WARNING")
        record = json.loads(path.read_text(encoding="utf-8").splitlines()[-1])
        assert record["msg"] == "hello"
        assert record["answer"] == 42
        assert record["logger"] == "mixalign.tests.logging"

    def test_level_filters(self, tmp_path):
        """Records below the configured level are dropped."""
        path = tmp_path / "run.log"
        configure_logging("WARNING", str(path))
        try:
            get_logger("tests.logging").info("hidden")
        finally:
            configure_logging("WARNING")
        assert path.read_text(encoding="utf-8") == ""
        assert logging.getLogger("mixalign").level == logging.WARNING


class TestErrors:
    """Exit codes and categories."""

    @pytest.mark.parametrize("error, code", [
        (InvalidInputError("x"), 3),
        (ConfigError("x"), 3),
        (NotVisibleError("x"), 3),
        (SceneError("x"), 5),
        (DataFormatError("x"), 5),
        (ProviderError("x"), 5),
    ])
    def test_exit_codes(self, error, code):
        """Each category maps to its exit code."""
        assert isinstance(error, MixAlignError)
        assert error.exit_code == code

    def test_messages_carry_details(self):
        """Offsets and field names appear in messages."""
        assert "offset 16" in str(DataFormatError("truncated", 16))
        assert "max_ratio" in str(ConfigError("bad", ["max_ratio"]))

    def test_builtin_bases(self):
        """Errors stay catchable by their builtin meaning."""
        assert isinstance(InvalidInputError("x"), ValueError)
        assert isinstance(SceneError("x"), LookupError)
