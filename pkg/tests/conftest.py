"""Shared fixtures.  Full transforms on the default grids take ~30 s each, so
they are computed once per session and reused across modules."""

from __future__ import annotations

import functools

import numpy as np
import pytest

from dsmnv.checks import gaussian
from dsmnv.scattering_maps import TransformConfig, forward_scatter, inverse_scatter

ACCEPTANCE_LINES: list[str] = []


class TransformCache:
    """Lazily computed transforms keyed by (amplitude, centre)."""

    def __init__(self):
        self.cfg = TransformConfig()

    def potential(self, amplitude: float, center: complex = 0.0):
        return gaussian(self.cfg.z_grid, amplitude, center=center)

    @functools.lru_cache(maxsize=None)
    def forward(self, amplitude: float, center: complex = 0.0):
        return forward_scatter(self.potential(amplitude, center), self.cfg)

    @functools.lru_cache(maxsize=None)
    def roundtrip(self, amplitude: float, center: complex = 0.0):
        return inverse_scatter(self.forward(amplitude, center), self.cfg)


@pytest.fixture(scope="session")
def transforms() -> TransformCache:
    return TransformCache()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
