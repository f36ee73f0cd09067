"""Shared surfaces. Analyses are expensive, so they are built once per session."""

import pytest

from immersion import SurfaceSpec, generate
from meancurvsphere import analyze


def _analyzed(spec):
    imm = generate(spec)
    sf, hp, report = analyze(imm)
    return imm, sf, hp, report


@pytest.fixture(scope="session")
def clifford_spectral():
    """Clifford torus on a 32^2 spectral grid: identities hold to rounding."""
    return _analyzed(SurfaceSpec("clifford", n=32, stencil="spectral"))


@pytest.fixture(scope="session")
def clifford_patch():
    """Clifford torus cut open to its fundamental square (simply connected)."""
    return _analyzed(SurfaceSpec("clifford", n=32, patch=True))


@pytest.fixture(scope="session")
def revolution_spectral():
    """Torus of revolution (3, 1): conformal but not Willmore."""
    return _analyzed(SurfaceSpec("revolution", n=64, stencil="spectral"))


@pytest.fixture(scope="session")
def catenoid():
    return _analyzed(SurfaceSpec("catenoid", n=32))
