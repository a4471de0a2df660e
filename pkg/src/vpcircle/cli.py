"""Command-line interface.

Subcommands: ``vp`` (f-circles), ``profile`` (tau(f) + fits + C50),
``centers`` (classical centres), ``synth`` (disc-model raster generator)
and ``bench`` (mode timing comparison).  Every output file gets a
``<out>.manifest.json`` sibling recording inputs, configuration, tool
version and wall time per stage; errors go to stderr as one JSON line
with a machine-readable code.  Exit codes: 0 success, 2 input error,
3 infeasible/degenerate target.
"""

import argparse
import json
import sys
import time

from . import __version__, centers, discmodel, geo, grid as gridmod, profile as profmod
from . import vpsearch
from .errors import VpError


def _fmt(x):
    """Shortest round-trip decimal form; keeps outputs byte-stable."""
    return repr(float(x))


# ---------------------------------------------------------------------------
# shared input handling

def _add_input_args(p):
    p.add_argument("--input", required=True, help="ESRI ASCII population grid")
    p.add_argument("--mask", help="GeoJSON Polygon/MultiPolygon region mask")
    p.add_argument("--bbox", help="S,W,N,E bounding-box mask (degrees)")


def _add_search_args(p):
    p.add_argument("--eps-km", type=float, default=1.0)
    p.add_argument("--coarse", type=int, default=8, help="coarsening factor (1 = none)")
    p.add_argument("--window-deg", type=float, default=5.0)
    p.add_argument("--threads", type=int, default=0,
                   help="sweep workers; 0 = machine parallelism")


def _load_masked(args):
    g = gridmod.load_esri_ascii(args.input)
    mask = None
    if args.mask and args.bbox:
        raise VpError("--mask and --bbox are mutually exclusive", code="input")
    if args.mask:
        mask = gridmod.load_geojson_mask(args.mask, g.spec)
    elif args.bbox:
        try:
            s, w, n, e = (float(v) for v in args.bbox.split(","))
        except ValueError:
            raise VpError(f"bad --bbox {args.bbox!r}; expected S,W,N,E", code="input")
        mask = gridmod.bbox_mask(g.spec, s, w, n, e)
    if mask is not None:
        g = gridmod.apply_mask(g, mask)
    return g, mask


def _config(args):
    return vpsearch.SearchConfig(
        eps_km=args.eps_km,
        coarsen_factor=max(1, args.coarse),
        window_deg=args.window_deg,
        candidates="masked" if (args.mask or args.bbox) else "all",
        workers=args.threads if args.threads > 0 else None)


def _write_manifest(out_path, args, stages, extra=None):
    manifest = {
        "tool": "vpcircle",
        "version": __version__,
        "command": args.command,
        "inputs": {k: getattr(args, k, None) for k in ("input", "mask", "bbox")},
        "config": {k: getattr(args, k) for k in vars(args)
                   if k not in ("command", "func")},
        "wall_time_s": stages,
    }
    if extra:
        manifest.update(extra)
    with open(str(out_path) + ".manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# vp

def cmd_vp(args):
    t0 = time.perf_counter()
    g, mask = _load_masked(args)
    cfg = _config(args)
    fs = _parse_fs(args.f)
    t1 = time.perf_counter()
    if args.exact:
        results = [vpsearch.vp_bruteforce(g, f, cfg, mask=mask) for f in fs]
    else:
        results = vpsearch.vp_fast(g, fs, cfg, mask=mask)
    t2 = time.perf_counter()

    if args.format == "csv":
        _write_vp_csv(args.out, results)
    elif args.format == "json":
        _write_vp_json(args.out, results)
    else:
        _write_vp_geojson(args.out, results, args.circle_segments)
    _write_manifest(args.out, args,
                    {"load": t1 - t0, "search": t2 - t1})
    return 0


def _parse_fs(spec_str):
    try:
        fs = [float(v) for v in spec_str.split(",")]
    except ValueError:
        raise VpError(f"bad --f {spec_str!r}", code="input")
    return fs


def _circle_row(c):
    return [c.f, c.center_lat, c.center_lon, c.radius_km, c.contained,
            c.target, c.multiplicity]


_VP_HEADER = "f,center_lat,center_lon,radius_km,population,target,multiplicity"


def _write_vp_csv(path, results):
    with open(path, "w") as fh:
        fh.write(_VP_HEADER + "\n")
        for c in results:
            row = _circle_row(c)
            fh.write(",".join(_fmt(v) for v in row[:-1]) + f",{c.multiplicity}\n")


def _write_vp_json(path, results):
    recs = [dict(zip(_VP_HEADER.split(","), _circle_row(c))) for c in results]
    with open(path, "w") as fh:
        json.dump(recs, fh, indent=2)
        fh.write("\n")


def _write_vp_geojson(path, results, segments):
    feats = []
    for c in results:
        props = dict(zip(_VP_HEADER.split(","), _circle_row(c)))
        feats.append({
            "type": "Feature",
            "geometry": {"type": "Point",
                         "coordinates": [c.center_lon, c.center_lat]},
            "properties": props,
        })
        if segments > 0:
            ring = []
            for k in range(segments + 1):
                bearing = 360.0 * (k % segments) / segments
                lat, lon = geo.destination(c.center_lat, c.center_lon,
                                           bearing, c.radius_km)
                ring.append([float(lon), float(lat)])
            feats.append({
                "type": "Feature",
                "geometry": {"type": "Polygon", "coordinates": [ring]},
                "properties": dict(props, geometry_role="vp-circle"),
            })
    with open(path, "w") as fh:
        json.dump({"type": "FeatureCollection", "features": feats}, fh, indent=2)
        fh.write("\n")


# ---------------------------------------------------------------------------
# profile

def cmd_profile(args):
    t0 = time.perf_counter()
    g, mask = _load_masked(args)
    cfg = _config(args)
    fs = None if args.fs == "default" else _parse_fs(args.fs)
    t1 = time.perf_counter()
    prof = profmod.compute_profile(g, fs, cfg)
    t2 = time.perf_counter()

    with open(args.out, "w") as fh:
        fh.write("f,radius_km,tau,center_lat,center_lon\n")
        for s in prof.samples:
            fh.write(",".join(_fmt(v) for v in
                              (s.f, s.radius_km, s.tau, s.center_lat, s.center_lon)) + "\n")

    summary = {"r1_km": prof.r1_km}
    if args.fit:
        summary["fit"] = _fit_summary(prof, args.fit)
    if args.c50:
        c = profmod.centralisation(prof, 0.5)
        summary["c50"] = {"value": c.value, "interpolated": c.interpolated}
    with open(str(args.out) + ".fit.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if args.svg:
        _write_profile_svg(args.svg, prof, summary.get("fit"))
    _write_manifest(args.out, args, {"load": t1 - t0, "profile": t2 - t1})
    return 0


def _fit_summary(prof, fit_spec):
    if fit_spec == "global":
        fit = profmod.fit_power_law(prof)
        return {"kind": "global", "a": fit.a, "sse": fit.sse,
                "f_range": list(fit.f_range)}
    if fit_spec.startswith("segments:"):
        try:
            k = int(fit_spec.split(":", 1)[1])
        except ValueError:
            raise VpError(f"bad --fit {fit_spec!r}", code="input")
        seg = profmod.fit_segmented(prof, k)
        return {"kind": "segments", "k": k,
                "breakpoints": list(seg.breakpoints), "sse": seg.sse,
                "segments": [{"a": s.a, "sse": s.sse, "f_range": list(s.f_range)}
                             for s in seg.segments]}
    raise VpError(f"bad --fit {fit_spec!r}; use global or segments:k", code="input")


def _write_profile_svg(path, prof, fit):
    """Log-log polyline of tau vs f in a fixed 800x600 viewport."""
    import math
    width, height, margin = 800, 600, 60
    pts = [(s.f, s.tau) for s in prof.samples if s.tau > 0]
    xmin, xmax = math.log10(pts[0][0]), math.log10(pts[-1][0])
    ys = [math.log10(t) for _, t in pts]
    ymin, ymax = min(ys), max(ys)
    if ymax - ymin < 1e-9:
        ymin, ymax = ymin - 1, ymax + 0.1

    def sx(f):
        return margin + (math.log10(f) - xmin) / (xmax - xmin) * (width - 2 * margin)

    def sy(t):
        return height - margin - (math.log10(t) - ymin) / (ymax - ymin) * (height - 2 * margin)

    poly = " ".join(f"{sx(f):.2f},{sy(t):.2f}" for f, t in pts)
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<polyline points="{poly}" fill="none" stroke="steelblue" stroke-width="2"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" '
        'stroke="black"/>',
        f'<text x="{width / 2}" y="{height - 15}" text-anchor="middle">'
        'population fraction f (log)</text>',
        f'<text x="18" y="{height / 2}" text-anchor="middle" '
        f'transform="rotate(-90 18 {height / 2})">normalized radius tau (log)</text>',
    ]
    for seg in (fit or {}).get("segments", []) if fit else []:
        f0, f1 = seg["f_range"]
        a = seg["a"]
        if not math.isfinite(a):
            continue
        t_mid = next(t for f, t in pts if f >= f0)
        # line through the first segment point with slope 1/a
        lines.append(
            f'<line x1="{sx(f0):.2f}" y1="{sy(t_mid):.2f}" x2="{sx(f1):.2f}" '
            f'y2="{sy(t_mid * (f1 / f0) ** (1 / a)):.2f}" stroke="crimson" '
            'stroke-dasharray="6 3"/>')
    lines.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# centers

def cmd_centers(args):
    t0 = time.perf_counter()
    g, _ = _load_masked(args)
    t1 = time.perf_counter()
    results = [centers.centre_of_population(g), centers.centre_3d(g),
               centers.geometric_median(g)]
    with open(args.out, "w") as fh:
        fh.write("method,lat,lon,bachi_km\n")
        for r in results:
            bachi = centers.bachi_standard_distance(g, r.lat, r.lon)
            fh.write(f"{r.method},{_fmt(r.lat)},{_fmt(r.lon)},{_fmt(bachi)}\n")
    t2 = time.perf_counter()
    _write_manifest(args.out, args, {"load": t1 - t0, "centers": t2 - t1})
    return 0


# ---------------------------------------------------------------------------
# synth

def cmd_synth(args):
    t0 = time.perf_counter()
    params = discmodel.DiscModelParams(rho0=args.rho0, r0_km=args.r0_km,
                                       a=args.a, ri_km=args.ri_km)
    try:
        lat_c, lon_c = (float(v) for v in args.center.split(","))
    except ValueError:
        raise VpError(f"bad --center {args.center!r}; expected LAT,LON", code="input")
    spec = _synth_spec(params, lat_c, lon_c, args.cell_deg, args.extent_deg)
    g = discmodel.synth_grid(params, spec, (lat_c, lon_c))
    gridmod.save_esri_ascii(g, args.out)
    t1 = time.perf_counter()
    _write_manifest(args.out, args, {"synth": t1 - t0}, extra={
        "analytic_total": discmodel.total_population(params),
        "grid_total": g.total,
    })
    return 0


def _synth_spec(params, lat_c, lon_c, cell_deg, extent_deg):
    if extent_deg is None:
        extent_deg = 1.3 * params.ri_km / geo.KM_PER_DEG
    n_half = int(round(extent_deg / cell_deg))
    n = 2 * n_half + 1
    return gridmod.GridSpec(
        n_rows=n, n_cols=n,
        lat0=lat_c + n_half * cell_deg,
        lon0=lon_c - n_half * cell_deg,
        cell_deg=cell_deg)


# ---------------------------------------------------------------------------
# bench

def cmd_bench(args):
    g, mask = _load_masked(args)
    fs = _parse_fs(args.f)
    report = {"grid": {"n_rows": g.spec.n_rows, "n_cols": g.spec.n_cols,
                       "total": g.total}, "modes": {}}
    for mode in args.modes.split(","):
        stats = vpsearch.SearchStats()
        cfg_kwargs = dict(eps_km=args.eps_km, window_deg=args.window_deg,
                          candidates="masked" if mask else "all", workers=1)
        t0 = time.perf_counter()
        if mode == "exact":
            res = [vpsearch.vp_bruteforce(g, f, vpsearch.SearchConfig(
                coarsen_factor=1, **cfg_kwargs), mask=mask, stats=stats) for f in fs]
        elif mode == "fast":
            res = vpsearch.vp_fast(g, fs, vpsearch.SearchConfig(
                coarsen_factor=1, **cfg_kwargs), mask=mask, stats=stats)
        elif mode == "coarse":
            res = vpsearch.vp_fast(g, fs, vpsearch.SearchConfig(
                coarsen_factor=args.coarse, **cfg_kwargs), mask=mask, stats=stats)
        else:
            raise VpError(f"unknown bench mode {mode!r}", code="input")
        dt = time.perf_counter() - t0
        report["modes"][mode] = {
            "wall_time_s": dt,
            "results": [{"f": c.f, "radius_km": c.radius_km,
                         "center": [c.center_lat, c.center_lon]} for c in res],
            "candidates_evaluated": stats.candidates_evaluated,
            "feasibility_checks": stats.feasibility_checks,
            "bisect_iterations": stats.bisect_iterations,
            "window_updates": stats.window_updates,
            "templates_built": stats.templates_built,
        }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        _write_manifest(args.out, args,
                        {m: report["modes"][m]["wall_time_s"] for m in report["modes"]})
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="vpcircle")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("vp", help="compute VP f-circles")
    _add_input_args(p)
    _add_search_args(p)
    p.add_argument("--f", required=True, help="fraction(s), comma separated")
    p.add_argument("--exact", action="store_true",
                   help="brute force every candidate (reference mode)")
    p.add_argument("--format", choices=("csv", "json", "geojson"), default="csv")
    p.add_argument("--circle-segments", type=int, default=0,
                   help="geojson only: vertices of the geodesic circle polygon")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vp)

    p = sub.add_parser("profile", help="compute a VP profile")
    _add_input_args(p)
    _add_search_args(p)
    p.add_argument("--fs", default="default")
    p.add_argument("--fit", help="global or segments:k")
    p.add_argument("--c50", action="store_true")
    p.add_argument("--svg")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("centers", help="classical population centres")
    _add_input_args(p)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_centers)

    p = sub.add_parser("synth", help="generate a disc-model raster")
    p.add_argument("--rho0", type=float, required=True)
    p.add_argument("--r0-km", type=float, required=True)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--ri-km", type=float, required=True)
    p.add_argument("--center", required=True, help="LAT,LON")
    p.add_argument("--cell-deg", type=float, required=True)
    p.add_argument("--extent-deg", type=float,
                   help="half extent of the square grid (default: fits the island)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("bench", help="compare search modes")
    _add_input_args(p)
    _add_search_args(p)
    p.add_argument("--f", default="0.5")
    p.add_argument("--modes", default="exact,fast,coarse")
    p.add_argument("--out")
    p.set_defaults(func=cmd_bench)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except VpError as exc:
        sys.stderr.write(json.dumps({"code": exc.code, "message": str(exc)}) + "\n")
        return exc.exit_code
    except OSError as exc:
        sys.stderr.write(json.dumps({"code": "io", "message": str(exc)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
