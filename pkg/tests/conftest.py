import random
from pathlib import Path

import pytest

from qdag.generate import random_network
from qdag.network import parse_network

NETWORKS = Path(__file__).resolve().parent.parent / "networks"


@pytest.fixture(scope="session")
def abc():
    """Root A with children B and C; C is the usual evidence variable."""
    return parse_network((NETWORKS / "abc.bn").read_text())


@pytest.fixture(scope="session")
def car():
    return parse_network((NETWORKS / "car_diagnosis.bn").read_text())


@pytest.fixture
def rng():
    return random.Random(20240601)


def small_networks(seed, count, max_vars=6):
    rng = random.Random(seed)
    return [random_network(rng, rng.randint(1, max_vars)) for _ in range(count)]


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
