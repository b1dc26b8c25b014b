from __future__ import annotations

import numpy as np
import pytest

from malicebench import Halfspace, MixtureSampler, make_separable_spec


def unit(d: int, i: int = 0) -> Halfspace:
    e = np.zeros(d)
    e[i] = 1.0
    return Halfspace(e)


@pytest.fixture
def separable_sampler():
    """d=20 two-component mixture with margin 0.5 enforced."""
    def make(seed: int = 0, gamma: float = 0.5, d: int = 20):
        ws = unit(d)
        spec = make_separable_spec(d, 2, 0.6, 1.0, ws, seed=0, strict=False)
        return MixtureSampler(spec, ws, seed, gamma=gamma)
    return make


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
