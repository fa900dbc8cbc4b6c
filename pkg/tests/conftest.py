from __future__ import annotations

import pytest

from testspaces import corpus, load_test_space, sample_frames

CORPUS_NAMES = (
    "classical-3",
    "two-disjoint",
    "glued-pair",
    "triangle",
    "mo2",
    "stateless",
)

# Filled by the acceptance battery; echoed after the run so the one-line
# verdicts survive output capture.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def spaces():
    return {name: load_test_space(corpus.gen(name)) for name in CORPUS_NAMES}


@pytest.fixture(scope="session")
def frames_10k():
    """The seeded sample shared by the heavy acceptance runs."""
    return sample_frames(3, 10_000, 0)


@pytest.fixture(scope="session")
def frames_20k():
    """Same seed, doubled count: extends frames_10k test for test."""
    return sample_frames(3, 20_000, 0)
