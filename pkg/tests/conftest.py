"""Shared fixtures and random-grid helpers for the test suite."""

import numpy as np
import pytest

from vpcircle.grid import GridSpec, PopulationGrid


def random_spec(rng, wrap=None, max_rows=40, max_cols=40):
    """A valid random GridSpec; wrap=True forces a full-ring grid."""
    if wrap is None:
        wrap = rng.random() < 0.4
    if wrap:
        n_cols = int(rng.choice([12, 16, 24, 36, 48]))
        cell = 360.0 / n_cols
        lon0 = -180.0 + cell / 2.0
    else:
        n_cols = int(rng.integers(4, max_cols))
        cell = float(rng.uniform(0.1, 2.0))
        lon0 = float(rng.uniform(-180.0, 180.0 - n_cols * cell))
    half = cell / 2.0
    max_nr = min(max_rows, max(4, int((180.0 - 2.0 * half - 1.0) / cell)))
    n_rows = int(rng.integers(4, max(5, max_nr)))
    lat_span = (n_rows - 1) * cell
    lat0 = float(rng.uniform(-90.0 + half + lat_span + 0.5, 90.0 - half - 0.5))
    return GridSpec(n_rows=n_rows, n_cols=n_cols, lat0=lat0, lon0=lon0, cell_deg=cell)


def random_grid(rng, wrap=None, sparsity=0.3, max_rows=40, max_cols=40):
    """A random population grid with mixed zero and positive cells."""
    spec = random_spec(rng, wrap=wrap, max_rows=max_rows, max_cols=max_cols)
    counts = rng.random((spec.n_rows, spec.n_cols))
    counts *= rng.random((spec.n_rows, spec.n_cols)) < sparsity
    counts *= 1000.0
    if counts.sum() == 0.0:
        counts[spec.n_rows // 2, spec.n_cols // 2] = 10.0
    return PopulationGrid(spec=spec, counts=counts)


def single_mass_grid(lat, lon, n=11, cell_deg=1.0, mass=100.0):
    """An n x n grid with all mass in the centre cell at (lat, lon)."""
    half = (n - 1) // 2
    spec = GridSpec(n_rows=n, n_cols=n,
                    lat0=lat + half * cell_deg,
                    lon0=lon - half * cell_deg,
                    cell_deg=cell_deg)
    counts = np.zeros((n, n))
    counts[half, half] = mass
    return PopulationGrid(spec=spec, counts=counts)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
