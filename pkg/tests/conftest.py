import pytest

from src.distributions import RngStream


@pytest.fixture
def rng():
    return RngStream(12345)


@pytest.fixture(autouse=True)
def _no_thread_override(monkeypatch):
    monkeypatch.delenv('SHRINKAGE_THREADS', raising=False)
