"""Classical centres and the spherical geometric median."""

import numpy as np
import pytest

from vpcircle import geo
from vpcircle.centers import (bachi_standard_distance, centre_3d,
                              centre_of_population, geometric_median)
from vpcircle.errors import InputError
from vpcircle.grid import GridSpec, PopulationGrid

from conftest import random_grid, single_mass_grid


def cross_grid():
    """Four equal masses placed symmetrically around (0, 0)."""
    spec = GridSpec(n_rows=21, n_cols=21, lat0=10.0, lon0=-10.0, cell_deg=1.0)
    counts = np.zeros((21, 21))
    counts[10, 5] = counts[10, 15] = counts[5, 10] = counts[15, 10] = 100.0
    return PopulationGrid(spec=spec, counts=counts)


def test_single_cell_all_methods():
    g = single_mass_grid(12.0, 34.0)
    for fn in (centre_of_population, centre_3d, geometric_median):
        r = fn(g)
        assert r.lat == pytest.approx(12.0, abs=1e-9)
        assert r.lon == pytest.approx(34.0, abs=1e-9)
    assert bachi_standard_distance(g, 12.0, 34.0) == 0.0


def test_cross_grid_all_centres_at_origin():
    g = cross_grid()
    for fn in (centre_of_population, centre_3d, geometric_median):
        r = fn(g)
        assert abs(r.lat) < 1e-6
        assert abs(r.lon) < 1e-6


def test_centre_of_population_cosine_weighting():
    # two equal masses on one parallel: plain mean longitude
    spec = GridSpec(n_rows=3, n_cols=11, lat0=41.0, lon0=0.0, cell_deg=1.0)
    counts = np.zeros((3, 11))
    counts[1, 0] = counts[1, 10] = 7.0
    g = PopulationGrid(spec=spec, counts=counts)
    r = centre_of_population(g)
    assert r.lat == pytest.approx(40.0)
    assert r.lon == pytest.approx(5.0)

    # masses at different latitudes: high-latitude lon weighted less
    counts2 = np.zeros((3, 11))
    counts2[0, 0] = counts2[2, 10] = 7.0  # lats 41 and 39
    g2 = PopulationGrid(spec=spec, counts=counts2)
    r2 = centre_of_population(g2)
    want = (np.cos(np.radians(41)) * 0 + np.cos(np.radians(39)) * 10) \
        / (np.cos(np.radians(41)) + np.cos(np.radians(39)))
    assert r2.lon == pytest.approx(want)


def test_centre_3d_projects_to_sphere():
    spec = GridSpec(n_rows=3, n_cols=3, lat0=61.0, lon0=-100.0, cell_deg=1.0)
    counts = np.zeros((3, 3))
    counts[0, 0] = counts[2, 2] = 5.0
    g = PopulationGrid(spec=spec, counts=counts)
    r = centre_3d(g)
    # midpoint of the two cells along the great circle
    d1 = geo.haversine(r.lat, r.lon, 61.0, -100.0)
    d2 = geo.haversine(r.lat, r.lon, 59.0, -98.0)
    assert d1 == pytest.approx(d2, abs=1e-6)


def test_centre_3d_antipodal_degenerate():
    spec = GridSpec(n_rows=3, n_cols=18, lat0=20.0, lon0=-180.0, cell_deg=20.0)
    counts = np.zeros((3, 18))
    counts[1, 0] = counts[1, 9] = 5.0  # lons -180 and 0 on the equator
    g = PopulationGrid(spec=spec, counts=counts)
    with pytest.raises(InputError):
        centre_3d(g)


def test_median_objective_nonincreasing(rng):
    for _ in range(25):
        g = random_grid(rng)
        objs = []
        r = geometric_median(g, callback=objs.append)
        assert r.converged
        assert np.all(np.diff(objs) <= 1e-9)


def test_median_beats_other_centres(rng):
    """The median minimizes weighted mean distance, so it never loses to
    the other centre definitions by more than the convergence tolerance."""
    def mean_dist(g, lat, lon):
        rows, cols = np.nonzero(g.counts)
        lats = g.spec.row_lats()[rows]
        lons = g.spec.col_lons()[cols]
        w = g.counts[rows, cols]
        return float(np.sum(w * geo.haversine(lat, lon, lats, lons)) / w.sum())

    for _ in range(10):
        g = random_grid(rng)
        med = geometric_median(g, tol_km=0.01)
        for other in (centre_of_population(g), centre_3d(g)):
            assert med.objective <= mean_dist(g, other.lat, other.lon) + 0.5


def test_median_anchored_at_dominant_cell():
    spec = GridSpec(n_rows=11, n_cols=11, lat0=5.0, lon0=-5.0, cell_deg=1.0)
    counts = np.ones((11, 11))
    counts[5, 5] = 1e6  # overwhelming mass at (0, 0)
    g = PopulationGrid(spec=spec, counts=counts)
    r = geometric_median(g, tol_km=0.01)
    assert geo.haversine(r.lat, r.lon, 0.0, 0.0) < 0.1


def test_median_reports_iterations():
    r = geometric_median(cross_grid())
    assert r.iterations >= 1
    assert r.method == "geometric_median"


def test_bachi_standard_distance():
    g = cross_grid()
    # all four masses are 5 degrees from the origin
    d = geo.haversine(0.0, 0.0, 5.0, 0.0)
    assert bachi_standard_distance(g, 0.0, 0.0) == pytest.approx(d, rel=1e-6)


def test_empty_grid_errors():
    spec = GridSpec(n_rows=2, n_cols=2, lat0=1.0, lon0=0.0, cell_deg=1.0)
    g = PopulationGrid(spec=spec, counts=np.zeros((2, 2)))
    for fn in (centre_of_population, centre_3d, geometric_median):
        with pytest.raises(InputError):
            fn(g)
