import math

import numpy as np
import pytest

from anisomhd.dynamics import State
from anisomhd.initial import band_limited_coeffs
from anisomhd.spectral import Grid, SpectralScalarField, SpectralVectorField, leray_project

ACCEPTANCE_LINES: dict[int, str] = {}


def record_acceptance(number: int, passed: bool, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def grid8():
    return Grid.cube(8)


@pytest.fixture(scope="session")
def grid16():
    return Grid.cube(16)


def random_scalar(grid, rng, band=None):
    band = band if band is not None else min(grid.shape) // 4
    return SpectralScalarField(grid, band_limited_coeffs(grid, band, rng, count=1)[0])


def random_vector(grid, rng, band=None, project=True):
    band = band if band is not None else min(grid.shape) // 4
    v = SpectralVectorField(grid, band_limited_coeffs(grid, band, rng, count=3))
    return leray_project(v) if project else v


def random_state(grid, rng, band=None, scale=1.0, t=0.0):
    u = random_vector(grid, rng, band)
    b = random_vector(grid, rng, band)
    return State(
        SpectralVectorField(grid, scale * u.coeffs, True), SpectralVectorField(grid, scale * b.coeffs, True), t
    )


def direct_values(grid, coeffs, points):
    """Evaluate sum_m c(m) exp(i m.x) by explicit summation over the non-zero modes."""
    m = [np.broadcast_to(x, grid.shape) for x in grid.mode_index]
    nz = np.nonzero(coeffs)
    ms = [m[a][nz] for a in range(3)]
    c = coeffs[nz]
    x = [np.arange(points) * (L / points) for L in grid.lengths]
    k = [2 * math.pi * ms[a] / grid.lengths[a] for a in range(3)]
    e1 = np.exp(1j * np.outer(x[0], k[0]))
    e2 = np.exp(1j * np.outer(x[1], k[1]))
    e3 = np.exp(1j * np.outer(x[2], k[2]))
    return np.einsum("im,jm,km,m->ijk", e1, e2, e3, c, optimize=True).real
