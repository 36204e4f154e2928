import os
import sys

import pytest

# Ensure the spdt package is importable without installation
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../')))

from spdt.core.params import SpdtParams  # noqa: E402
from spdt.core.random_source import RandomSource  # noqa: E402
from spdt.infra.logging import LogManager  # noqa: E402
import spdt.infra.settings as settings_mod  # noqa: E402


@pytest.fixture(autouse=True)
def _isolated_settings(monkeypatch, tmp_path):
    """Run every test against the packaged defaults only.

    Clears SPDT_* variables the developer may have exported and points the
    working directory at an empty tmp dir so a stray .env is not picked up.
    """
    for key in list(os.environ):
        if key.startswith(settings_mod.ENV_PREFIX):
            monkeypatch.delenv(key, raising=False)
    monkeypatch.chdir(tmp_path)
    settings_mod.reset_settings_cache()
    yield
    settings_mod.reset_settings_cache()


@pytest.fixture(autouse=True)
def _clear_event_history():
    LogManager().clear()
    yield
    LogManager().clear()


@pytest.fixture
def params():
    return SpdtParams.defaults()


@pytest.fixture
def rng():
    return RandomSource(20240611)


@pytest.fixture
def events():
    """Recorded run events, optionally only those of one source."""
    def _events(source=None):
        history = LogManager()._history
        return [event for event in history if source is None or event.source == source]
    return _events
