"""Analytic circular-island population model.

A radially symmetric density on a disc of radius ``ri_km``:

    density(r) = rho0 * r0^(2-a) / (r + r0)^(2-a)   for r <= ri, else 0

The cumulative population has a closed form (with log-bearing special
cases at a = 0 and a = 1), which makes the model an independent oracle
for the grid-based circle search: ``synth_grid`` materializes it as a
population raster and ``analytic_vp_radius`` gives the radius the search
should find.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import geo
from .errors import InputError
from .grid import GridSpec, PopulationGrid

_BISECT_TOL_KM = 1e-9


@dataclass(frozen=True)
class DiscModelParams:
    rho0: float   # people / km^2 at the centre
    r0_km: float  # softening scale
    a: float      # radial decay exponent (2 = uniform)
    ri_km: float  # island radius

    def __post_init__(self):
        if self.rho0 <= 0 or self.r0_km <= 0 or self.ri_km <= 0:
            raise InputError("rho0, r0_km and ri_km must be positive")


def density(r, params):
    """People per km^2 at distance r from the island centre."""
    r = np.asarray(r, dtype=np.float64)
    inside = r <= params.ri_km
    val = params.rho0 * params.r0_km ** (2.0 - params.a) \
        * (r + params.r0_km) ** (params.a - 2.0)
    out = np.where(inside & (r >= 0), val, 0.0)
    return float(out) if out.ndim == 0 else out


def _antiderivative(u, a, r0):
    """Antiderivative of r*(r+r0)^(a-2) dr evaluated at u = r + r0."""
    if a == 0.0:
        return math.log(u) + r0 / u
    if a == 1.0:
        return u - r0 * math.log(u)
    return u ** a / a - r0 * u ** (a - 1.0) / (a - 1.0)


def cumulative_population(R, params):
    """People within distance R of the island centre (closed form)."""
    if R <= 0:
        return 0.0
    r = min(R, params.ri_km)
    a, r0 = params.a, params.r0_km
    pref = 2.0 * math.pi * params.rho0 * r0 ** (2.0 - a)
    return pref * (_antiderivative(r + r0, a, r0) - _antiderivative(r0, a, r0))


def total_population(params):
    return cumulative_population(params.ri_km, params)


def analytic_vp_radius(f, params):
    """The radius R in [0, ri] with cumulative population = f * total.

    Bisection on the strictly increasing closed form.
    """
    if not (0.0 < f <= 1.0):
        raise InputError("f must be in (0, 1]")
    target = f * total_population(params)
    lo, hi = 0.0, params.ri_km
    while hi - lo > _BISECT_TOL_KM:
        mid = 0.5 * (lo + hi)
        if cumulative_population(mid, params) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def asymptotic_vp_radius(f, params):
    """Large-radius power-law approximation of the VP radius.

    R = (a f P / (rho0 r0^(2-a) pi))^(1/a) - r0, clamped at 0.  Kept in
    the form with a single factor of pi; see ``analytic_vp_radius`` for
    the exact value.
    """
    if params.a <= 0:
        raise InputError("asymptotic form requires a > 0")
    p_total = total_population(params)
    base = params.a * f * p_total / (params.rho0 * params.r0_km ** (2.0 - params.a) * math.pi)
    return max(0.0, base ** (1.0 / params.a) - params.r0_km)


def synth_grid(params, spec, center):
    """Materialize the disc model on a raster.

    Each cell's count is the model density at the cell centre times the
    spherical cell area.  The island must fit inside the grid, be small
    enough (<= 500 km) and near the equator (|lat| <= 20 degrees) for the
    planar model to stay honest on the sphere.
    """
    lat_c, lon_c = center
    if params.ri_km > 500.0:
        raise InputError("island radius must be <= 500 km")
    if abs(lat_c) > 20.0:
        raise InputError("island centre must have |lat| <= 20 degrees")
    _check_island_fits(params, spec, lat_c, lon_c)

    lats = spec.row_lats()
    lons = spec.col_lons()
    dist = geo.haversine(lat_c, lon_c, lats[:, None], lons[None, :])
    rho = density(dist, params)

    half = spec.cell_deg / 2.0
    lat_n = np.radians(lats + half)
    lat_s = np.radians(lats - half)
    band = geo.EARTH_RADIUS_KM ** 2 * np.radians(spec.cell_deg) * (np.sin(lat_n) - np.sin(lat_s))
    counts = rho * band[:, None]
    return PopulationGrid(spec=spec, counts=counts)


def _check_island_fits(params, spec, lat_c, lon_c):
    ri_deg_lat = params.ri_km / geo.KM_PER_DEG
    half = spec.cell_deg / 2.0
    north = spec.lat0 + half
    south = spec.lat0 - (spec.n_rows - 1) * spec.cell_deg - half
    if lat_c + ri_deg_lat > north or lat_c - ri_deg_lat < south:
        raise InputError("island clipped by the grid's latitude extent")
    if spec.wraps:
        return
    min_cos = min(np.cos(np.radians(abs(lat_c) + ri_deg_lat)), np.cos(np.radians(lat_c)))
    ri_deg_lon = params.ri_km / (geo.KM_PER_DEG * max(min_cos, 1e-9))
    west = spec.lon0 - half
    east = spec.lon0 + (spec.n_cols - 1) * spec.cell_deg + half
    dwest = (lon_c - west) % 360.0
    deast = (east - lon_c) % 360.0
    if dwest > spec.n_cols * spec.cell_deg:
        raise InputError("island centre outside the grid")
    if dwest < ri_deg_lon or deast < ri_deg_lon:
        raise InputError("island clipped by the grid's longitude extent")
