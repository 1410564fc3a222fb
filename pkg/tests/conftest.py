import os
import random
import sys

import pytest

from healthpass.crypto.group import get_group


class FixedRng:
    """Stands in for random.Random where a test needs to force a scalar.

    ``random_scalar`` draws ``1 + randrange(q - 1)``, so queueing ``d`` makes
    the next scalar exactly ``d``.
    """

    def __init__(self, *scalars, seed=0):
        self._queue = list(scalars)
        self._fallback = random.Random(seed)

    def randrange(self, n):
        if self._queue:
            return self._queue.pop(0) - 1
        return self._fallback.randrange(n)

    def randbytes(self, n):
        return self._fallback.randbytes(n)


@pytest.fixture(scope="session")
def toy():
    return get_group("toy23", allow_test=True)


@pytest.fixture(scope="session")
def big():
    return get_group("modp2048")


@pytest.fixture
def rng():
    return random.Random(1234)


def toy_subgroup():
    """The order-11 subgroup of Z_23*, enumerated by brute force."""
    return sorted(x for x in range(1, 23) if pow(x, 11, 23) == 1)


# HEALTHPASS_OFFLINE=1 runs a suite with every registry transport replaced by a
# failing stub and every socket connection refused; any attempt fails the test.
OFFLINE = os.environ.get("HEALTHPASS_OFFLINE") == "1"


@pytest.fixture(autouse=True)
def _offline_guard(monkeypatch):
    if not OFFLINE:
        yield
        return
    from healthpass.harness.network import no_network
    from healthpass.registry import client

    stub = client.FailingTransport()
    monkeypatch.setattr(client.HttpTransport, "request", lambda self, *a, **k: stub.request(*a, **k))
    monkeypatch.setattr(client.InProcessTransport, "request", lambda self, *a, **k: stub.request(*a, **k))
    with no_network() as attempts:
        yield
    assert not attempts and stub.attempts == 0, f"network used while offline: {attempts}"


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
