import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from perceptxai.synth import DatasetConfig, build_dataset  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """20 images per class at 32x32, built once per session."""
    root = tmp_path_factory.mktemp("small_ds")
    return build_dataset(DatasetConfig(width=32, height=32, count=20, seed=3), str(root))


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
