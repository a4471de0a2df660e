"""Smallest-circle-containing-a-population-fraction search.

Two routes to the same answer:

* ``vp_bruteforce`` runs an independent radius binary search at every
  candidate cell.  Slow, simple, and the reference the fast path is
  tested against.
* ``vp_fast`` sweeps candidates row-major keeping the best radius found
  so far; a candidate only gets the full binary search when the
  population within the current best radius (plus tolerance) already
  reaches the target.  Distances are computed once per sweep row and
  reused for every centre on that row, and multiple fractions share one
  sweep.  With ``coarsen_factor > 1`` the search first runs on an
  aggregated grid and then only fine cells near the coarse optimum are
  considered (a heuristic; exact when the factor is 1).
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import geo
from .errors import InfeasibleError, InputError
from .grid import RegionMask, coarsen

_EPS_MARGIN_ROWS = 1  # slack rows when truncating templates by best radius


@dataclass(frozen=True)
class SearchConfig:
    eps_km: float = 1.0
    coarsen_factor: int = 8
    window_deg: float = 5.0
    candidates: str = "all"  # "all" | "masked"
    workers: int = 1

    def __post_init__(self):
        if self.eps_km <= 0:
            raise InputError("eps_km must be positive")
        if self.window_deg <= 0:
            raise InputError("window_deg must be positive")
        if self.coarsen_factor < 1:
            raise InputError("coarsen_factor must be >= 1")
        if self.candidates not in ("all", "masked"):
            raise InputError("candidates must be 'all' or 'masked'")


@dataclass(frozen=True)
class VpCircle:
    """One f-circle: the smallest circle holding at least ``target`` people."""

    f: float
    center: tuple  # (row, col), lexicographically smallest co-centre
    center_lat: float
    center_lon: float
    radius_km: float
    contained: float
    target: float
    multiplicity: int
    co_centers: tuple  # all (row, col) whose own best radius ties the minimum


@dataclass
class SearchStats:
    """Counters for benchmarking; exact for single-worker runs."""

    candidates_evaluated: int = 0
    feasibility_checks: int = 0
    bisect_iterations: int = 0
    window_updates: int = 0
    templates_built: int = 0

    def merge(self, other):
        self.candidates_evaluated += other.candidates_evaluated
        self.feasibility_checks += other.feasibility_checks
        self.bisect_iterations += other.bisect_iterations
        self.window_updates += other.window_updates
        self.templates_built += other.templates_built


class _Engine:
    """Prefix-summed view of a grid plus distance-template plumbing."""

    def __init__(self, grid, stats=None):
        self.grid = grid
        self.spec = grid.spec
        self.stats = stats if stats is not None else SearchStats()
        counts = grid.counts
        self.n_cols = self.spec.n_cols
        # Sequential row sums: bit-identical to the per-row prefix totals
        # and, chained over rows, to grid.total (see PopulationGrid).
        self.row_sums = np.cumsum(counts, axis=1)[:, -1]
        if self.spec.wraps:
            # Three tiled copies so any window centred in the middle copy
            # (half-width <= n_cols/2) stays in bounds.
            tiled = np.concatenate([counts, counts, counts], axis=1)
            self.prefix = np.zeros((self.spec.n_rows, 3 * self.n_cols + 1))
            np.cumsum(tiled, axis=1, out=self.prefix[:, 1:])
        else:
            self.prefix = np.zeros((self.spec.n_rows, self.n_cols + 1))
            np.cumsum(counts, axis=1, out=self.prefix[:, 1:])
        self.row_lats = self.spec.row_lats()

    def template(self, row, rows=None):
        self.stats.templates_built += 1
        return geo.build_template(self.row_lats[row], self.spec, rows=rows)

    def row_window(self, row, radius_km):
        """Contiguous row range whose meridian distance can be <= radius."""
        span = radius_km / geo.KM_PER_DEG / self.spec.cell_deg
        lo = max(0, int(np.floor(row - span)) - _EPS_MARGIN_ROWS)
        hi = min(self.spec.n_rows, int(np.ceil(row + span)) + 1 + _EPS_MARGIN_ROWS)
        return lo, hi

    def pops(self, template, cols, radii):
        """Population within ``radii`` of centres (template row, cols).

        ``radii`` is a scalar (shared radius) or one radius per column.
        Rows accumulate in ascending order so results are deterministic
        regardless of how candidates were partitioned across workers.
        """
        dist = template.distances
        cols = np.asarray(cols)
        radii_arr = np.asarray(radii, dtype=np.float64)
        rmax = float(radii_arr.max())
        out = np.zeros(cols.shape[0])
        rows = np.nonzero(dist[:, 0] <= rmax)[0]
        wraps = self.spec.wraps
        n = self.n_cols
        prefix = self.prefix
        for r in rows:
            h = np.searchsorted(dist[r], radii_arr, side="right") - 1
            self.stats.window_updates += cols.shape[0]
            if wraps:
                full = (2 * h + 1) >= n
                lo = np.clip(cols + n - h, 0, 3 * n)
                hi = np.clip(cols + n + h + 1, 0, 3 * n)
                part = prefix[r, hi] - prefix[r, lo]
                vals = np.where(h < 0, 0.0, np.where(full, self.row_sums[r], part))
            else:
                lo = np.clip(cols - h, 0, n)
                hi = np.clip(cols + h + 1, 0, n)
                vals = np.where(h < 0, 0.0, prefix[r, hi] - prefix[r, lo])
            out += vals
        return out

    def bisect(self, template, cols, target, eps_km):
        """Binary search the minimum radius reaching ``target`` at each
        column, all from the same fixed bracket (0, half circumference)."""
        cols = np.asarray(cols)
        k = cols.shape[0]
        lo = np.zeros(k)
        hi = np.full(k, geo.MAX_DISTANCE_KM)
        width = geo.MAX_DISTANCE_KM
        while width >= eps_km:
            mid = 0.5 * (lo + hi)
            ge = self.pops(template, cols, mid) >= target
            hi = np.where(ge, mid, hi)
            lo = np.where(ge, lo, mid)
            width *= 0.5
            self.stats.bisect_iterations += k
        self.stats.candidates_evaluated += k
        return hi


# ---------------------------------------------------------------------------
# Public operations


def population_within(grid, center, radius):
    """Total count in the closed ball of ``radius`` km around a cell centre."""
    if radius < 0:
        raise InputError("radius must be nonnegative")
    engine = _Engine(grid)
    template = engine.template(center[0])
    return float(engine.pops(template, [center[1]], float(radius))[0])


def min_radius_at(grid, center, target, eps_km=1.0):
    """Smallest radius around ``center`` containing at least ``target``
    people, to within ``eps_km`` (binary search, upper bracket returned)."""
    if target <= 0:
        raise InputError("target must be positive")
    if target > grid.total:
        raise InfeasibleError(f"target {target} exceeds grid total {grid.total}")
    engine = _Engine(grid)
    template = engine.template(center[0])
    return float(engine.bisect(template, [center[1]], target, eps_km)[0])


def _check_fraction(f):
    if not (0.0 < f <= 1.0):
        raise InputError(f"population fraction must be in (0, 1], got {f}")


def _candidate_matrix(grid, cfg, mask):
    if cfg.candidates == "masked" and mask is not None:
        if isinstance(mask, RegionMask):
            if mask.spec != grid.spec:
                raise InputError("candidate mask spec does not match grid")
            cand = mask.inside
        else:
            cand = np.asarray(mask, dtype=bool)
        if not cand.any():
            raise InputError("candidate mask selects no cells")
        return cand
    return np.ones((grid.spec.n_rows, grid.spec.n_cols), dtype=bool)


def _make_circle(engine, f, target, entries, eps_km):
    """Assemble a VpCircle from evaluated (cell -> best radius) entries.

    The reported radius is the reported centre's own binary-search radius
    (within eps_km of the global minimum, since co-centres tie within
    eps_km) so the circle as reported always contains the target.
    """
    m_min = min(entries.values())
    co = tuple(sorted(cell for cell, m in entries.items() if m <= m_min + eps_km))
    center = co[0]
    radius = entries[center]
    template = engine.template(center[0])
    contained = float(engine.pops(template, [center[1]], radius)[0])
    lat, lon = engine.spec.cell_latlon(*center)
    return VpCircle(
        f=f, center=center, center_lat=lat, center_lon=lon,
        radius_km=float(radius), contained=contained, target=target,
        multiplicity=len(co), co_centers=co)


def vp_bruteforce(grid, f, cfg=None, mask=None, stats=None):
    """Reference search: full radius binary search at every candidate cell."""
    cfg = cfg or SearchConfig()
    _check_fraction(f)
    if grid.total <= 0:
        raise InfeasibleError("grid has zero total population")
    engine = _Engine(grid, stats)
    target = f * grid.total
    cand = _candidate_matrix(grid, cfg, mask)
    entries = {}
    for row in range(grid.spec.n_rows):
        cols = np.nonzero(cand[row])[0]
        if cols.size == 0:
            continue
        template = engine.template(row)
        radii = engine.bisect(template, cols, target, cfg.eps_km)
        for c, m in zip(cols, radii):
            entries[(row, int(c))] = float(m)
    return _make_circle(engine, f, target, entries, cfg.eps_km)


def vp_fast(grid, fs, cfg=None, mask=None, stats=None):
    """Optimized sweep returning one circle per requested fraction.

    With ``coarsen_factor == 1`` the result matches ``vp_bruteforce``
    (same radii to within eps, identical co-centre sets); larger factors
    are a coarse-to-fine heuristic.
    """
    cfg = cfg or SearchConfig()
    fs = list(fs)
    if not fs:
        raise InputError("at least one population fraction is required")
    for f in fs:
        _check_fraction(f)
    if grid.total <= 0:
        raise InfeasibleError("grid has zero total population")

    cand = _candidate_matrix(grid, cfg, mask)

    factor = 1
    if cfg.coarsen_factor > 1:
        for d in range(min(cfg.coarsen_factor, grid.spec.n_rows, grid.spec.n_cols), 0, -1):
            if grid.spec.n_rows % d == 0 and grid.spec.n_cols % d == 0:
                factor = d
                break
    if factor > 1:
        coarse = coarsen(grid, factor)
        coarse_cand = cand.reshape(
            coarse.spec.n_rows, factor, coarse.spec.n_cols, factor).any(axis=(1, 3))
        coarse_engine = _Engine(coarse, stats)
        coarse_entries = _sweep(coarse_engine, fs, [f * coarse.total for f in fs],
                                coarse_cand, cfg.eps_km, 1)
        window = np.zeros_like(cand)
        for f, target in zip(fs, [f * coarse.total for f in fs]):
            m_min = min(coarse_entries[f].values())
            for cell, m in coarse_entries[f].items():
                if m <= m_min + cfg.eps_km:
                    lat, lon = coarse.spec.cell_latlon(*cell)
                    window |= _window_mask(grid.spec, lat, lon, cfg.window_deg)
        narrowed = cand & window
        if narrowed.any():
            cand = narrowed

    engine = _Engine(grid, stats)
    targets = [f * grid.total for f in fs]
    entries = _sweep(engine, fs, targets, cand, cfg.eps_km, cfg.workers)
    return [_make_circle(engine, f, target, entries[f], cfg.eps_km)
            for f, target in zip(fs, targets)]


def _window_mask(spec, lat, lon, window_deg):
    lats = spec.row_lats()
    lons = spec.col_lons()
    in_lat = np.abs(lats - lat) <= window_deg
    dlon = np.abs((lons - lon + 180.0) % 360.0 - 180.0)
    in_lon = dlon <= window_deg
    return in_lat[:, None] & in_lon[None, :]


def _sweep(engine, fs, targets, cand, eps_km, workers):
    """Row-major sweep shared by every fraction.

    Returns, per fraction, a dict of evaluated cell -> its binary-search
    radius; the dict always contains every cell whose radius ties the
    global minimum within eps.
    """
    spec = engine.spec
    # Seed with the heaviest candidate cell so the best-radius filter
    # starts pruning immediately.
    masked = np.where(cand, engine.grid.counts, -1.0)
    seed = np.unravel_index(int(np.argmax(masked)), masked.shape)
    seed_template = engine.template(seed[0])
    seed_radii = {}
    for f, target in zip(fs, targets):
        seed_radii[f] = float(engine.bisect(seed_template, [seed[1]], target, eps_km)[0])

    rows = [r for r in range(spec.n_rows) if cand[r].any()]
    if workers is None or workers < 1:
        workers = os.cpu_count() or 1
    chunks = _split(rows, workers)

    def run_chunk(chunk_rows):
        local = {f: {seed: seed_radii[f]} for f in fs}
        best = dict(seed_radii)
        for row in chunk_rows:
            cols = np.nonzero(cand[row])[0]
            rq = max(best[f] + eps_km for f in fs)
            trunc = engine.template(row, rows=engine.row_window(row, rq))
            full_template = None
            for f, target in zip(fs, targets):
                pops = engine.pops(trunc, cols, best[f] + eps_km)
                engine.stats.feasibility_checks += cols.shape[0]
                caught = [int(c) for c in cols[pops >= target]
                          if (row, int(c)) not in local[f]]
                if not caught:
                    continue
                if full_template is None:
                    full_template = engine.template(row)
                radii = engine.bisect(full_template, caught, target, eps_km)
                for c, m in zip(caught, radii):
                    local[f][(row, c)] = float(m)
                best[f] = min(best[f], float(radii.min()))
        return local

    if len(chunks) == 1:
        results = [run_chunk(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            results = list(pool.map(run_chunk, chunks))

    entries = {f: {} for f in fs}
    for local in results:
        for f in fs:
            entries[f].update(local[f])
    return entries


def _split(items, k):
    k = min(k, len(items)) or 1
    size = (len(items) + k - 1) // k
    return [items[i:i + size] for i in range(0, len(items), size)]
