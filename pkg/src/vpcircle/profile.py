"""VP profiles: normalized circle radius as a function of the included
population fraction, the centralisation score derived from it, and
power-law / segmented fits of the profile shape."""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateProfileError, InputError
from .vpsearch import SearchConfig, vp_fast

# Dense enough to expose inflection points, cheap under a shared sweep.
DEFAULT_FS = tuple(np.round(np.arange(1, 40) * 0.025, 6)) + (1.0,)


@dataclass(frozen=True)
class ProfileSample:
    f: float
    radius_km: float
    center: tuple  # (row, col)
    center_lat: float
    center_lon: float
    tau: float


@dataclass(frozen=True)
class VpProfile:
    samples: tuple  # ProfileSample, f strictly increasing, last f == 1
    r1_km: float

    @property
    def fs(self):
        return np.array([s.f for s in self.samples])

    @property
    def taus(self):
        return np.array([s.tau for s in self.samples])


@dataclass(frozen=True)
class PowerLawFit:
    a: float          # decay exponent, 1 / slope in log-log space
    intercept: float  # log-space offset
    sse: float        # sum of squared log residuals
    f_range: tuple
    n_samples: int


@dataclass(frozen=True)
class SegmentedFit:
    breakpoints: tuple  # f of the last sample in each left segment
    segments: tuple     # one PowerLawFit per segment
    sse: float


@dataclass(frozen=True)
class CentralisationResult:
    f: float
    value: float
    interpolated: bool


def compute_profile(grid, fs=None, cfg=None):
    """One shared multi-f sweep, normalized by the radius at f = 1."""
    cfg = cfg or SearchConfig()
    fs = list(DEFAULT_FS if fs is None else fs)
    if not fs:
        raise InputError("profile needs at least one fraction")
    if any(not (0 < f <= 1) for f in fs):
        raise InputError("profile fractions must be in (0, 1]")
    if sorted(set(fs)) != fs:
        raise InputError("profile fractions must be strictly increasing")
    if fs[-1] != 1.0:
        fs.append(1.0)
    circles = vp_fast(grid, fs, cfg)
    r1 = circles[-1].radius_km
    if r1 < cfg.eps_km:
        raise DegenerateProfileError(
            "whole population fits one cell; profile undefined")
    samples = tuple(
        ProfileSample(f=c.f, radius_km=c.radius_km, center=c.center,
                      center_lat=c.center_lat, center_lon=c.center_lon,
                      tau=c.radius_km / r1)
        for c in circles)
    return VpProfile(samples=samples, r1_km=r1)


def centralisation(profile, f):
    """1 - tau(f)/sqrt(f).  0 for a uniform disc, near 1 for a population
    concentrated in a point.  Log-linear interpolation between sampled
    fractions is flagged in the result."""
    if not (0 < f <= 1):
        raise InputError("f must be in (0, 1]")
    fs = profile.fs
    taus = profile.taus
    exact = np.nonzero(np.abs(fs - f) < 1e-12)[0]
    if exact.size:
        tau = float(taus[exact[0]])
        interpolated = False
    else:
        if f < fs[0] or f > fs[-1]:
            raise InputError(f"f={f} outside the sampled profile range")
        j = int(np.searchsorted(fs, f))
        f0, f1 = fs[j - 1], fs[j]
        t0, t1 = taus[j - 1], taus[j]
        if t0 <= 0 or t1 <= 0:
            w = (f - f0) / (f1 - f0)
            tau = float((1 - w) * t0 + w * t1)
        else:
            w = (math.log(f) - math.log(f0)) / (math.log(f1) - math.log(f0))
            tau = float(math.exp((1 - w) * math.log(t0) + w * math.log(t1)))
        interpolated = True
    return CentralisationResult(f=f, value=1.0 - tau / math.sqrt(f),
                                interpolated=interpolated)


def _usable(profile, f_range):
    pts = [(s.f, s.tau) for s in profile.samples if s.radius_km > 0]
    if f_range is not None:
        lo, hi = f_range
        pts = [(f, t) for f, t in pts if lo <= f <= hi]
    return pts


def _fit_points(pts, f_range):
    logf = np.log([f for f, _ in pts])
    logt = np.log([t for _, t in pts])
    slope, intercept = np.polyfit(logf, logt, 1)
    resid = logt - (slope * logf + intercept)
    a = 1.0 / slope if slope > 0 else math.inf
    return PowerLawFit(a=float(a), intercept=float(intercept),
                       sse=float(np.sum(resid ** 2)),
                       f_range=(pts[0][0], pts[-1][0]), n_samples=len(pts))


def fit_power_law(profile, f_range=None):
    """Least-squares line on (log f, log tau); the slope s gives a = 1/s."""
    pts = _usable(profile, f_range)
    if len(pts) < 3:
        raise InputError("power-law fit needs at least 3 samples with radius > 0")
    return _fit_points(pts, f_range)


def fit_segmented(profile, k):
    """Best k-breakpoint piecewise power law (independent segment fits).

    Breakpoint placement is an exhaustive search over the sampled f
    values; every segment must keep at least 3 samples.
    """
    if k not in (1, 2):
        raise InputError("k must be 1 or 2")
    pts = _usable(profile, None)
    n = len(pts)
    if n < 3 * (k + 1):
        raise InputError(f"segmented fit with k={k} needs at least {3 * (k + 1)} samples")
    best = None
    for splits in itertools.combinations(range(3, n - 2), k):
        if k == 2 and splits[1] - splits[0] < 3:
            continue
        bounds = (0,) + splits + (n,)
        segs = [pts[bounds[i]:bounds[i + 1]] for i in range(k + 1)]
        fits = tuple(_fit_points(seg, None) for seg in segs)
        sse = sum(f.sse for f in fits)
        if best is None or sse < best[0]:
            breakpoints = tuple(pts[s - 1][0] for s in splits)
            best = (sse, SegmentedFit(breakpoints=breakpoints, segments=fits,
                                      sse=float(sse)))
    return best[1]
