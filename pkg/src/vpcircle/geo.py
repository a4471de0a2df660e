"""Spherical geometry helpers.

Great-circle distances on a fixed-radius sphere and the per-latitude
distance template that lets the circle search reuse one set of distances
for every centre on the same grid row.
"""

from dataclasses import dataclass

import numpy as np

# IUGG mean Earth radius. Fixed for the whole process.
EARTH_RADIUS_KM = 6371.0088

# Largest possible great-circle distance: half the circumference.
MAX_DISTANCE_KM = np.pi * EARTH_RADIUS_KM

DEG = np.pi / 180.0

# Kilometres per degree of latitude (or of longitude at the equator).
KM_PER_DEG = EARTH_RADIUS_KM * DEG


def haversine(lat1, lon1, lat2, lon2):
    """Great-circle distance in km between points given in degrees.

    Accepts scalars or broadcastable numpy arrays.
    """
    phi1 = np.multiply(lat1, DEG)
    phi2 = np.multiply(lat2, DEG)
    dphi = np.subtract(lat2, lat1) * DEG
    dlmb = np.subtract(lon2, lon1) * DEG
    h = np.sin(dphi / 2.0) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlmb / 2.0) ** 2
    h = np.clip(h, 0.0, 1.0)
    return 2.0 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(h))


def destination(lat, lon, bearing_deg, distance_km):
    """Point reached from (lat, lon) travelling distance_km along the
    great circle with the given initial bearing (degrees, 0 = north)."""
    phi = np.radians(lat)
    lam = np.radians(lon)
    theta = np.radians(bearing_deg)
    delta = distance_km / EARTH_RADIUS_KM
    phi2 = np.arcsin(np.sin(phi) * np.cos(delta)
                     + np.cos(phi) * np.sin(delta) * np.cos(theta))
    lam2 = lam + np.arctan2(np.sin(theta) * np.sin(delta) * np.cos(phi),
                            np.cos(delta) - np.sin(phi) * np.sin(phi2))
    lat2 = np.degrees(phi2)
    lon2 = (np.degrees(lam2) + 180.0) % 360.0 - 180.0
    return lat2, lon2


@dataclass(frozen=True)
class DistanceTemplate:
    """Distances from a centre latitude to every (row, lon-offset) cell.

    ``distances[r, k]`` is the great-circle distance between a centre at
    ``center_lat`` and the cell centre on row ``r`` offset ``k`` columns
    east (or west, by symmetry).  Valid for any centre column on the row,
    which is what makes it reusable across a whole sweep row.
    """

    center_lat: float
    cell_deg: float
    distances: np.ndarray  # (n_rows, width), nondecreasing along axis 1

    @property
    def n_rows(self):
        return self.distances.shape[0]

    @property
    def width(self):
        return self.distances.shape[1]


def template_width(spec):
    """Number of distinct lon offsets needed: half the ring when the grid
    wraps the globe, otherwise the full grid width."""
    return spec.n_cols // 2 + 1 if spec.wraps else spec.n_cols


def build_template(center_lat, spec, rows=None):
    """Build the distance template for a centre at ``center_lat``.

    ``rows`` optionally restricts the template to a slice of grid rows
    (used by the search to avoid computing distances to rows that cannot
    be inside the current circle); rows outside the slice are filled with
    +inf so they never match any radius.
    """
    width = template_width(spec)
    lats = spec.row_lats()
    offsets = np.arange(width) * spec.cell_deg
    if rows is None:
        dist = haversine(center_lat, 0.0, lats[:, None], offsets[None, :])
    else:
        lo, hi = rows
        dist = np.full((spec.n_rows, width), np.inf)
        dist[lo:hi] = haversine(center_lat, 0.0, lats[lo:hi, None], offsets[None, :])
    # Rows are mathematically nondecreasing in the offset; enforce it
    # against sub-ulp rounding so binary search and counting agree.
    np.maximum.accumulate(dist, axis=1, out=dist)
    return DistanceTemplate(center_lat=float(center_lat), cell_deg=spec.cell_deg, distances=dist)


def row_halfwidth(template, row, radius):
    """Largest offset k with ``template.distances[row, k] <= radius``.

    Binary search over the nondecreasing row; returns -1 when no cell in
    the row is within the radius.
    """
    return int(np.searchsorted(template.distances[row], radius, side="right")) - 1


def halfwidths(template, radius):
    """Per-row halfwidths for one radius (-1 where the row is empty).

    Equivalent to ``row_halfwidth`` applied to every row; the counting
    form vectorizes and, because template rows are forced nondecreasing,
    agrees with the binary search exactly.
    """
    return np.sum(template.distances <= radius, axis=1) - 1
