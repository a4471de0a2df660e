"""Population rasters on a regular lat/lon grid.

Row 0 is the northernmost row everywhere (ESRI ASCII / SEDAC convention)
and all coordinates refer to cell centres.  Missing or negative values
become 0 at ingestion; populations are never negative downstream.
"""

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError

_WRAP_TOL_DEG = 1e-9


def _norm_lon(lon):
    """Normalize a longitude to [-180, 180)."""
    return (lon + 180.0) % 360.0 - 180.0


@dataclass(frozen=True)
class GridSpec:
    """Geometry of a regular raster: shape, north-west cell centre, cell size."""

    n_rows: int
    n_cols: int
    lat0: float  # centre latitude of the northernmost row
    lon0: float  # centre longitude of the westernmost column
    cell_deg: float

    def __post_init__(self):
        if self.n_rows < 1 or self.n_cols < 1:
            raise InputError("grid must have at least one row and column")
        if self.cell_deg <= 0:
            raise InputError("cell_deg must be positive")
        if self.n_cols * self.cell_deg > 360.0 + _WRAP_TOL_DEG:
            raise InputError("grid spans more than 360 degrees of longitude")
        half = self.cell_deg / 2.0
        south = self.lat0 - (self.n_rows - 1) * self.cell_deg
        if self.lat0 > 90.0 - half + 1e-12 or south < -90.0 + half - 1e-12:
            raise InputError("cell centres must lie strictly inside the poles")
        object.__setattr__(self, "lon0", _norm_lon(self.lon0))

    @property
    def wraps(self):
        """True when the columns span exactly 360 degrees of longitude."""
        return abs(self.n_cols * self.cell_deg - 360.0) < _WRAP_TOL_DEG

    def row_lats(self):
        return self.lat0 - np.arange(self.n_rows) * self.cell_deg

    def col_lons(self):
        return _norm_lon(self.lon0 + np.arange(self.n_cols) * self.cell_deg)

    def cell_latlon(self, row, col):
        return (self.lat0 - row * self.cell_deg,
                _norm_lon(self.lon0 + col * self.cell_deg))


def _freeze(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class PopulationGrid:
    """A raster of nonnegative population counts plus its geometry."""

    spec: GridSpec
    counts: np.ndarray
    total: float = field(init=False)

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.float64)
        if counts.shape != (self.spec.n_rows, self.spec.n_cols):
            raise InputError(
                f"counts shape {counts.shape} does not match spec "
                f"({self.spec.n_rows}, {self.spec.n_cols})")
        if not np.all(np.isfinite(counts)):
            raise InputError("population counts must be finite")
        if np.any(counts < 0):
            raise InputError("population counts must be nonnegative")
        object.__setattr__(self, "counts", _freeze(counts))
        # Sequential row-by-row total, matching the accumulation order the
        # circle search uses, so "population within the saturation radius"
        # equals `total` bit-exactly.
        row_totals = np.cumsum(counts, axis=1)[:, -1]
        object.__setattr__(self, "total", float(np.cumsum(row_totals)[-1]))


@dataclass(frozen=True)
class RegionMask:
    """Boolean per-cell membership on the same geometry as a target grid."""

    spec: GridSpec
    inside: np.ndarray

    def __post_init__(self):
        inside = np.asarray(self.inside, dtype=bool)
        if inside.shape != (self.spec.n_rows, self.spec.n_cols):
            raise InputError("mask shape does not match spec")
        inside = inside.copy()
        inside.flags.writeable = False
        object.__setattr__(self, "inside", inside)


# ---------------------------------------------------------------------------
# ESRI ASCII grid I/O

_HEADER_KEYS = ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize")


def load_esri_ascii(path):
    """Read an ESRI ASCII grid into a PopulationGrid.

    Header keys may appear in any order and any case; NODATA and negative
    values are mapped to 0.  Errors report the offending line number.
    """
    header = {}
    with open(path) as fh:
        lines = fh.read().splitlines()
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if len(parts) == 2 and parts[0][0].isalpha():
            key = parts[0].lower()
            try:
                header[key] = float(parts[1])
            except ValueError:
                raise InputError(f"{path}:{i + 1}: non-numeric header value {parts[1]!r}")
            i += 1
        else:
            break
    for key in _HEADER_KEYS:
        if key not in header:
            raise InputError(f"{path}: missing header key {key!r}")
    n_cols = int(header["ncols"])
    n_rows = int(header["nrows"])
    if n_cols != header["ncols"] or n_rows != header["nrows"]:
        raise InputError(f"{path}: ncols/nrows must be integers")
    cell = header["cellsize"]
    nodata = header.get("nodata_value")

    counts = np.empty((n_rows, n_cols))
    for r in range(n_rows):
        lineno = i + r + 1
        if i + r >= len(lines):
            raise InputError(f"{path}:{lineno}: expected {n_rows} data rows, found {r}")
        tokens = lines[i + r].split()
        if len(tokens) != n_cols:
            raise InputError(
                f"{path}:{lineno}: expected {n_cols} values, found {len(tokens)}")
        try:
            counts[r] = [float(t) for t in tokens]
        except ValueError:
            bad = next(t for t in tokens if not _is_number(t))
            raise InputError(f"{path}:{lineno}: non-numeric token {bad!r}")

    if nodata is not None:
        counts[counts == nodata] = 0.0
    counts[counts < 0] = 0.0
    counts[~np.isfinite(counts)] = 0.0
    spec = GridSpec(
        n_rows=n_rows, n_cols=n_cols,
        lat0=header["yllcorner"] + (n_rows - 0.5) * cell,
        lon0=header["xllcorner"] + cell / 2.0,
        cell_deg=cell)
    return PopulationGrid(spec=spec, counts=counts)


def _is_number(token):
    try:
        float(token)
        return True
    except ValueError:
        return False


def save_esri_ascii(grid, path, nodata=-9999):
    """Write a grid as ESRI ASCII.  Values are written with full precision
    so a load/save round trip is bit exact."""
    spec = grid.spec
    with open(path, "w") as fh:
        fh.write(f"ncols {spec.n_cols}\n")
        fh.write(f"nrows {spec.n_rows}\n")
        fh.write(f"xllcorner {spec.lon0 - spec.cell_deg / 2.0!r}\n")
        fh.write(f"yllcorner {spec.lat0 - (spec.n_rows - 0.5) * spec.cell_deg!r}\n")
        fh.write(f"cellsize {spec.cell_deg!r}\n")
        fh.write(f"NODATA_value {nodata}\n")
        for row in grid.counts:
            fh.write(" ".join(repr(float(v)) for v in row))
            fh.write("\n")


# ---------------------------------------------------------------------------
# CSV ingestion

def load_csv(path, spec):
    """Sum `lat,lon,population` rows (header required) into the owning cells.

    Duplicate cells are additive.  A point exactly halfway between two cell
    centres goes to the northern row / western column.
    """
    counts = np.zeros((spec.n_rows, spec.n_cols))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        return PopulationGrid(spec=spec, counts=counts)
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < 3:
            raise InputError(f"{path}:{lineno}: expected lat,lon,population")
        try:
            lat, lon, pop = float(row[0]), float(row[1]), float(row[2])
        except ValueError:
            raise InputError(f"{path}:{lineno}: non-numeric value")
        r, c = _owning_cell(spec, lat, lon)
        if r is None:
            raise InputError(f"{path}:{lineno}: point ({lat}, {lon}) outside grid")
        counts[r, c] += max(pop, 0.0)
    return PopulationGrid(spec=spec, counts=counts)


def _owning_cell(spec, lat, lon):
    cell = spec.cell_deg
    # Ties at half-cell distance resolve to the northern row (lower index).
    fr = (spec.lat0 - lat) / cell
    r = int(np.ceil(fr - 0.5))
    dlon = (_norm_lon(lon) - spec.lon0) % 360.0
    fc = dlon / cell
    c = int(np.ceil(fc - 0.5))
    if spec.wraps:
        c %= spec.n_cols
    if not (0 <= r < spec.n_rows and 0 <= c < spec.n_cols):
        return None, None
    if abs(spec.lat0 - r * cell - lat) > cell / 2.0 + 1e-9:
        return None, None
    return r, c


# ---------------------------------------------------------------------------
# Aggregation and masking

def coarsen(grid, factor):
    """Aggregate factor x factor blocks by summation.

    The coarse total equals the fine total exactly and coarse cell centres
    sit at the block centroids.
    """
    if factor < 1 or int(factor) != factor:
        raise InputError("coarsen factor must be a positive integer")
    factor = int(factor)
    if factor == 1:
        return grid
    spec = grid.spec
    if spec.n_rows % factor or spec.n_cols % factor:
        raise InputError(
            f"factor {factor} does not divide grid shape "
            f"({spec.n_rows}, {spec.n_cols})")
    nr, nc = spec.n_rows // factor, spec.n_cols // factor
    counts = grid.counts.reshape(nr, factor, nc, factor).sum(axis=(1, 3))
    coarse = GridSpec(
        n_rows=nr, n_cols=nc,
        lat0=spec.lat0 - (factor - 1) / 2.0 * spec.cell_deg,
        lon0=spec.lon0 + (factor - 1) / 2.0 * spec.cell_deg,
        cell_deg=spec.cell_deg * factor)
    return PopulationGrid(spec=coarse, counts=counts)


def apply_mask(grid, mask):
    """Zero all counts outside the mask and recompute the total."""
    if mask.spec != grid.spec:
        raise InputError("mask spec does not match grid spec")
    if not mask.inside.any():
        raise InputError("mask selects no cells")
    counts = np.where(mask.inside, grid.counts, 0.0)
    return PopulationGrid(spec=grid.spec, counts=counts)


def bbox_mask(spec, south, west, north, east):
    """Mask of cells whose centres fall in a lat/lon bounding box.

    The box may cross the antimeridian (west > east).
    """
    if south > north:
        raise InputError("bbox south must not exceed north")
    lats = spec.row_lats()
    lons = spec.col_lons()
    in_lat = (lats >= south) & (lats <= north)
    west, east = _norm_lon(west), _norm_lon(east)
    if west <= east:
        in_lon = (lons >= west) & (lons <= east)
    else:
        in_lon = (lons >= west) | (lons <= east)
    return RegionMask(spec=spec, inside=in_lat[:, None] & in_lon[None, :])


# ---------------------------------------------------------------------------
# Polygon rasterization (even-odd rule, cell-centre membership)

def rasterize_polygon(rings, spec):
    """Rasterize a polygon (first ring outer, later rings holes) to a mask.

    A cell is inside iff its centre is inside by even-odd ray casting;
    centres exactly on an edge count as inside.  Rings are (lon, lat)
    vertex sequences, closed, and must not cross the antimeridian.
    """
    if not rings:
        raise InputError("polygon has no rings")
    checked = [_check_ring(ring) for ring in rings]
    lats = spec.row_lats()
    lons = spec.col_lons()
    px = np.repeat(lons[None, :], spec.n_rows, axis=0).ravel()
    py = np.repeat(lats[:, None], spec.n_cols, axis=1).ravel()
    crossings = np.zeros(px.shape, dtype=np.int64)
    on_edge = np.zeros(px.shape, dtype=bool)
    for ring in checked:
        _cast_rays(ring, px, py, crossings, on_edge)
    inside = ((crossings % 2) == 1) | on_edge
    return RegionMask(spec=spec, inside=inside.reshape(spec.n_rows, spec.n_cols))


def _check_ring(ring):
    pts = np.asarray(ring, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise InputError("ring must be a sequence of (lon, lat) pairs")
    if pts.shape[0] < 4:
        raise InputError("ring must have at least 4 vertices")
    if not (pts[0] == pts[-1]).all():
        raise InputError("ring is not closed")
    if np.any(np.abs(np.diff(pts[:, 0])) > 180.0):
        raise InputError("ring crosses the antimeridian; split it first")
    return pts


def _cast_rays(pts, px, py, crossings, on_edge):
    x1, y1 = pts[:-1, 0], pts[:-1, 1]
    x2, y2 = pts[1:, 0], pts[1:, 1]
    for ax, ay, bx, by in zip(x1, y1, x2, y2):
        if ay == by and ax == bx:
            continue
        # point-on-segment test (collinear and within the bounding box)
        cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
        seg_len = np.hypot(bx - ax, by - ay)
        near = np.abs(cross) <= 1e-12 * max(seg_len, 1.0)
        within = (px >= min(ax, bx) - 1e-12) & (px <= max(ax, bx) + 1e-12) \
            & (py >= min(ay, by) - 1e-12) & (py <= max(ay, by) + 1e-12)
        on_edge |= near & within
        if ay == by:
            continue  # horizontal edges never cross the upward ray
        # standard even-odd upward ray crossing
        cond = ((ay > py) != (by > py))
        with np.errstate(invalid="ignore"):
            xint = ax + (py - ay) * (bx - ax) / (by - ay)
        crossings += (cond & (px < xint)).astype(np.int64)


def load_geojson_mask(path, spec):
    """Rasterize the Polygon/MultiPolygon geometry of a GeoJSON file.

    Only geometry is read; properties are ignored.  MultiPolygon parts are
    unioned.
    """
    with open(path) as fh:
        doc = json.load(fh)
    geoms = list(_iter_geometries(doc))
    if not geoms:
        raise InputError(f"{path}: no Polygon or MultiPolygon geometry found")
    inside = np.zeros((spec.n_rows, spec.n_cols), dtype=bool)
    for geom in geoms:
        if geom["type"] == "Polygon":
            polys = [geom["coordinates"]]
        else:
            polys = geom["coordinates"]
        for rings in polys:
            inside |= rasterize_polygon(rings, spec).inside
    return RegionMask(spec=spec, inside=inside)


def _iter_geometries(doc):
    t = doc.get("type")
    if t in ("Polygon", "MultiPolygon"):
        yield doc
    elif t == "Feature":
        geom = doc.get("geometry") or {}
        yield from _iter_geometries(geom)
    elif t == "FeatureCollection":
        for feat in doc.get("features", []):
            yield from _iter_geometries(feat)
    elif t == "GeometryCollection":
        for geom in doc.get("geometries", []):
            yield from _iter_geometries(geom)
