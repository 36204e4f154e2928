import logging
import os

import pytest

from spdt.infra.settings import load_settings, reset_settings_cache, resolve_settings


def test_packaged_defaults():
    settings = load_settings()
    assert settings["step_seconds"] == 300
    assert settings["delta_sec"] == 10800.0
    assert settings["sigma"] == 0.33
    assert settings["split_midnight"] is False


def test_settings_are_cached(monkeypatch):
    first = load_settings()
    monkeypatch.setenv("SPDT_RUNS", "7")
    assert load_settings() is first
    reset_settings_cache()
    assert load_settings()["runs"] == 7


def test_user_file_overrides_defaults(tmp_path, monkeypatch, caplog):
    user_file = tmp_path / "site.yaml"
    user_file.write_text("radius_m: 30.0\nworkers: 4\nnot_a_setting: 1\n")
    monkeypatch.setenv("SPDT_SETTINGS_FILE", str(user_file))
    with caplog.at_level(logging.WARNING):
        settings = load_settings()
    assert settings["radius_m"] == 30.0
    assert settings["workers"] == 4
    assert "not_a_setting" not in settings
    assert "Ignoring unknown setting 'not_a_setting'" in caplog.text


def test_unreadable_user_file_is_skipped(tmp_path, monkeypatch, caplog):
    user_file = tmp_path / "broken.yaml"
    user_file.write_text("- just\n- a list\n")
    monkeypatch.setenv("SPDT_SETTINGS_FILE", str(user_file))
    with caplog.at_level(logging.WARNING):
        settings = load_settings()
    assert settings["radius_m"] == 20.0
    assert "Failed to read settings file" in caplog.text


def test_environment_beats_user_file(tmp_path, monkeypatch):
    user_file = tmp_path / "site.yaml"
    user_file.write_text("seeds: 100\n")
    monkeypatch.setenv("SPDT_SETTINGS_FILE", str(user_file))
    monkeypatch.setenv("SPDT_SEEDS", "250")
    monkeypatch.setenv("SPDT_SPLIT_MIDNIGHT", "yes")
    monkeypatch.setenv("SPDT_G", "0.5")
    settings = load_settings()
    assert settings["seeds"] == 250
    assert settings["split_midnight"] is True
    assert settings["g"] == 0.5


def test_bad_environment_value_is_ignored(monkeypatch, caplog):
    monkeypatch.setenv("SPDT_SPLIT_MIDNIGHT", "maybe")
    monkeypatch.setenv("SPDT_WORKERS", "many")
    with caplog.at_level(logging.WARNING):
        settings = load_settings()
    assert settings["split_midnight"] is False
    assert settings["workers"] == 1
    assert "SPDT_WORKERS" in caplog.text


def test_dotenv_in_working_directory(tmp_path, monkeypatch):
    (tmp_path / ".env").write_text("SPDT_LOG_LEVEL=DEBUG\n")
    monkeypatch.setenv("SPDT_RUNS", "3")
    settings = load_settings()
    assert settings["log_level"] == "DEBUG"
    assert settings["runs"] == 3
    os.environ.pop("SPDT_LOG_LEVEL", None)


def test_overrides_skip_none_values(monkeypatch):
    monkeypatch.setenv("SPDT_DAYS", "10")
    settings = resolve_settings({"days": None, "runs": 5})
    assert settings["days"] == 10
    assert settings["runs"] == 5
    # the cached layer is left untouched
    assert load_settings()["runs"] == 1


@pytest.mark.parametrize("key", ["step_seconds", "r_per_hour", "badn_m", "log_level"])
def test_every_cli_setting_has_a_default(key):
    assert key in load_settings()
