import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from thermal_wavepackets import build_lattice

settings.register_profile(
    "default", max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def lat_a():
    """Reference box: D=1, L=10, M=64, m=1 (used with T=1)."""
    return build_lattice(1, 10.0, 64)


@pytest.fixture(scope="session")
def lat_b():
    """Tiny box for exact N-particle identities: D=1, L=8, M=6."""
    return build_lattice(1, 8.0, 6)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


_criteria = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion; echoed in the summary."""
    lines = request.config.stash.setdefault(_criteria, [])

    def record(number: int, title: str, ok: bool, detail: str):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        lines.append((number, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_criteria, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
