"""
Tests for settings loading
"""

import json
import logging

import pytest
import structlog
from pydantic import ValidationError
from src.propp_toolkit.utils.config import ToolkitSettings, load_settings
from src.propp_toolkit.utils.logger import bind_run_context, setup_logging


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep PROPP_* variables from the outer shell out of these tests"""
    for name in ("PROPP_MAX_TABLE", "PROPP_BRUTE_CAP", "PROPP_TATE_CAP", "PROPP_JOBS", "PROPP_LOG_LEVEL", "PROPP_LOG_FORMAT"):
        monkeypatch.delenv(name, raising=False)


def test_defaults_without_file(tmp_path):
    """Test that a missing file means defaults"""
    settings = load_settings(str(tmp_path / "absent.yaml"))
    assert settings.max_table is None
    assert settings.brute_cap == 256
    assert settings.tate_cap == 4096
    assert settings.table_cap(3) == 3 ** 7
    assert settings.table_cap(5) == 5 ** 7


def test_nested_and_flat_files(tmp_path):
    """Test both the toolkit block and a flat mapping"""
    nested = tmp_path / "nested.yaml"
    nested.write_text("toolkit:\n  brute_cap: 64\n  jobs: 2\n")
    flat = tmp_path / "flat.yaml"
    flat.write_text("brute_cap: 32\n")
    assert load_settings(str(nested)).brute_cap == 64
    assert load_settings(str(nested)).jobs == 2
    assert load_settings(str(flat)).brute_cap == 32


def test_environment_beats_file(tmp_path, monkeypatch):
    """Test precedence of PROPP_* over the YAML file"""
    path = tmp_path / "settings.yaml"
    path.write_text("toolkit:\n  max_table: 100\n  brute_cap: 64\n")
    monkeypatch.setenv("PROPP_MAX_TABLE", "9")
    settings = load_settings(str(path))
    assert settings.max_table == 9
    assert settings.brute_cap == 64
    assert settings.table_cap(3) == 9


def test_overrides_skip_unset_flags():
    """Test that None flags leave settings untouched"""
    settings = ToolkitSettings().with_overrides(max_table=None, brute_cap=27)
    assert settings.max_table is None
    assert settings.brute_cap == 27


def test_invalid_values(tmp_path):
    """Test field validation"""
    path = tmp_path / "bad.yaml"
    path.write_text("toolkit:\n  jobs: 0\n")
    with pytest.raises(ValidationError):
        load_settings(str(path))


def test_log_format_is_restricted(monkeypatch):
    """Test that an unknown log format is rejected at load time"""
    monkeypatch.setenv("PROPP_LOG_FORMAT", "xml")
    with pytest.raises(ValidationError):
        ToolkitSettings()


def test_log_file_carries_run_context(tmp_path):
    """Test the file handler and the bound command name"""
    setup_logging(log_level="INFO", log_dir=str(tmp_path), format_type="json")
    bind_run_context("classify", file="g.pc", suite=None)
    structlog.get_logger("propp_test").info("table_built", order=27)
    logging.shutdown()

    files = list(tmp_path.glob("propp_*.log"))
    assert len(files) == 1
    record = json.loads(files[0].read_text().strip().splitlines()[-1])
    assert record["event"] == "table_built"
    assert record["command"] == "classify"
    assert record["file"] == "g.pc"
    assert "suite" not in record

    setup_logging()
    structlog.contextvars.clear_contextvars()
