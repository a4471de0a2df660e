"""Classical population centres and dispersion statistics.

Three centre definitions (weighted lat/lon mean, normalized 3D vector
mean, geometric median) plus the population-weighted RMS distance used
to compare them.
"""

from dataclasses import dataclass

import numpy as np

from . import geo
from .errors import InputError
from .grid import _norm_lon

_ANCHOR_KM = 1e-9  # distance below which a cell counts as "at" the iterate
_DEGENERATE_NORM = 1e-12


@dataclass(frozen=True)
class CentreResult:
    lat: float
    lon: float
    method: str  # centre_of_population | centre_3d | geometric_median
    iterations: int | None = None
    objective: float | None = None  # weighted mean distance, km (median only)
    converged: bool = True


def _weighted_cells(grid):
    """Lat, lon and weight of every populated cell."""
    rows, cols = np.nonzero(grid.counts)
    if rows.size == 0:
        raise InputError("grid has zero total population")
    lats = grid.spec.row_lats()[rows]
    lons = grid.spec.col_lons()[cols]
    w = grid.counts[rows, cols]
    return lats, lons, w


def centre_of_population(grid):
    """Weighted mean latitude and cosine-weighted mean longitude."""
    lats, lons, w = _weighted_cells(grid)
    lat = float(np.sum(w * lats) / np.sum(w))
    coslat = np.cos(np.radians(lats))
    denom = np.sum(w * coslat)
    if abs(denom) < _DEGENERATE_NORM * np.sum(w):
        raise InputError("degenerate input: all population at the poles")
    lon = float(np.sum(w * lons * coslat) / denom)
    return CentreResult(lat=lat, lon=_norm_lon(lon), method="centre_of_population")


def _unit_vectors(lats, lons):
    phi = np.radians(lats)
    lam = np.radians(lons)
    return np.stack([np.cos(phi) * np.cos(lam),
                     np.cos(phi) * np.sin(lam),
                     np.sin(phi)], axis=1)


def _vector_to_latlon(v):
    lat = float(np.degrees(np.arcsin(np.clip(v[2], -1.0, 1.0))))
    lon = float(np.degrees(np.arctan2(v[1], v[0])))
    return lat, _norm_lon(lon)


def centre_3d(grid):
    """Weighted mean of unit position vectors, projected back to the sphere."""
    lats, lons, w = _weighted_cells(grid)
    x = _unit_vectors(lats, lons)
    mean = (w[:, None] * x).sum(axis=0) / w.sum()
    norm = np.linalg.norm(mean)
    if norm < _DEGENERATE_NORM:
        raise InputError("degenerate input: balanced antipodal population")
    lat, lon = _vector_to_latlon(mean / norm)
    return CentreResult(lat=lat, lon=lon, method="centre_3d")


def _gc_distances(y, x):
    """Great-circle km from unit vector y to each unit row of x."""
    cosd = np.clip(x @ y, -1.0, 1.0)
    return geo.EARTH_RADIUS_KM * np.arccos(cosd)


def _tangent_logs(y, x, d):
    """Log map of each x_i at y: km-scaled tangent vectors of length d_i."""
    cos_t = np.clip(x @ y, -1.0, 1.0)
    perp = x - cos_t[:, None] * y[None, :]
    pn = np.linalg.norm(perp, axis=1)
    u = np.zeros_like(x)
    ok = pn > 1e-15
    u[ok] = perp[ok] / pn[ok][:, None]
    return d[:, None] * u


def _exp_map(y, step_km):
    norm = np.linalg.norm(step_km)
    if norm < 1e-15:
        return y
    ang = norm / geo.EARTH_RADIUS_KM
    out = np.cos(ang) * y + np.sin(ang) * step_km / norm
    return out / np.linalg.norm(out)


def geometric_median(grid, tol_km=0.1, max_iter=1000, callback=None):
    """Weiszfeld iteration on the sphere.

    The inverse-distance-weighted step is taken in the tangent plane at
    the current iterate and mapped back to the sphere, with step halving
    whenever a full step would raise the objective, so the weighted mean
    great-circle distance is nonincreasing at every iteration.  When the
    iterate sits on a populated cell the anchored rule of Vardi and Zhang
    decides whether to stay (the cell is the median) or how far to move.
    ``callback``, if given, receives the objective after every iteration.
    """
    lats, lons, w = _weighted_cells(grid)
    x = _unit_vectors(lats, lons)
    wsum = w.sum()

    mean = (w[:, None] * x).sum(axis=0) / wsum
    norm = np.linalg.norm(mean)
    y = mean / norm if norm >= _DEGENERATE_NORM else x[0].copy()

    def objective_at(yy):
        d = _gc_distances(yy, x)
        return float((w * d).sum() / wsum), d

    obj, d = objective_at(y)
    iterations = 0
    converged = False
    while iterations < max_iter:
        iterations += 1
        at_point = d < _ANCHOR_KM
        if at_point.any():
            others = ~at_point
            if not others.any():
                converged = True
                break
            logs = _tangent_logs(y, x[others], d[others])
            inv = w[others] / d[others]
            # pull of the far points vs the weight anchored at y
            r_vec = (inv[:, None] * logs).sum(axis=0)
            r_norm = float(np.linalg.norm(r_vec))
            eta = float(w[at_point].sum())
            if r_norm <= eta:
                converged = True  # the anchored cell is the minimizer
                break
            step = (1.0 - eta / r_norm) * (inv[:, None] * logs).sum(axis=0) / inv.sum()
        else:
            inv = w / d
            step = (inv[:, None] * _tangent_logs(y, x, d)).sum(axis=0) / inv.sum()

        # backtrack until the objective does not increase
        t = 1.0
        while True:
            y_new = _exp_map(y, t * step)
            obj_new, d_new = objective_at(y_new)
            if obj_new <= obj or t < 1e-9:
                break
            t *= 0.5
        if obj_new > obj:
            converged = True  # no descent direction left
            break
        moved = float(geo.EARTH_RADIUS_KM * np.arccos(np.clip(y @ y_new, -1.0, 1.0)))
        y, obj, d = y_new, obj_new, d_new
        if callback is not None:
            callback(obj)
        if moved < tol_km:
            converged = True
            break

    lat, lon = _vector_to_latlon(y)
    return CentreResult(lat=lat, lon=lon, method="geometric_median",
                        iterations=iterations, objective=obj,
                        converged=converged)


def bachi_standard_distance(grid, lat, lon):
    """Population-weighted RMS great-circle distance to (lat, lon), km."""
    lats, lons, w = _weighted_cells(grid)
    d = geo.haversine(lat, lon, lats, lons)
    return float(np.sqrt(np.sum(w * d * d) / np.sum(w)))
