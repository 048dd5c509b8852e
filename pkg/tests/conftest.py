import numpy as np
import pytest
from hypothesis import settings, strategies as st

from so3gait.rotations import Rot3

settings.register_profile("default", max_examples=100, deadline=None)
settings.load_profile("default")


def random_rotations(rng: np.random.Generator, n: int) -> list[Rot3]:
    q = rng.standard_normal((n, 4))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    return [Rot3(tuple(row)) for row in q]


@st.composite
def rotations(draw):
    v = draw(
        st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=4, max_size=4).filter(
            lambda v: sum(x * x for x in v) > 1e-3
        )
    )
    n = float(np.linalg.norm(v))
    return Rot3(tuple(x / n for x in v))


angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)


_CRITERIA = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_CRITERIA] = []


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)


@pytest.fixture
def criterion(request):
    """Record one pass/fail line per acceptance criterion; returns ``ok`` for asserting."""

    def record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash[_CRITERIA].append((number, line))
        print(line)
        return ok

    return record


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
