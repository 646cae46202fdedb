import numpy as np
import pytest

from consfield.autoencoder import AeParams
from consfield.numerics import Rng

ACCEPTANCE_LINES = []


def random_params(rng, D, H, act, tied, scale=0.7):
    W = rng.normal(0, scale, (D, H))
    R = None if tied else rng.normal(0, scale, (D, H))
    return AeParams(W, R, rng.normal(0, 0.5, H), rng.normal(0, 0.5, D), act, tied)


@pytest.fixture
def rng():
    return Rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
