/**
 * Bindings for the vpcircle command-line tool.
 *
 * Everything here is marshalling: grids live as ESRI ASCII files on
 * disk, computations run in the CLI subprocess, and results are parsed
 * back from its CSV/JSON outputs.  No numeric logic is reimplemented,
 * so binding values are the exact doubles the CLI wrote.
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

/** How the CLI is invoked; override with VPCIRCLE_CLI (space-separated). */
function cliCommand(): string[] {
  const env = process.env.VPCIRCLE_CLI;
  if (env && env.trim().length > 0) return env.trim().split(/\s+/);
  return ["python3", "-m", "vpcircle.cli"];
}

export class VpCliError extends Error {
  code: string;
  exitCode: number;

  constructor(message: string, code: string, exitCode: number) {
    super(message);
    this.name = "VpCliError";
    this.code = code;
    this.exitCode = exitCode;
  }
}

export interface GridSpec {
  nRows: number;
  nCols: number;
  lat0: number;
  lon0: number;
  cellDeg: number;
}

export interface BoundingBox {
  south: number;
  west: number;
  north: number;
  east: number;
}

/** Opaque handle: a raster file plus an optional region restriction. */
export interface BoundGrid {
  readonly ascPath: string;
  readonly spec: GridSpec;
  /** Total of the raster file (before any mask is applied). */
  readonly fileTotal: number;
  readonly maskPath?: string;
  readonly bbox?: BoundingBox;
}

export interface SearchOptions {
  epsKm?: number;
  coarse?: number;
  windowDeg?: number;
  threads?: number;
  exact?: boolean;
}

export interface VpRecord {
  f: number;
  centerLat: number;
  centerLon: number;
  radiusKm: number;
  population: number;
  target: number;
  multiplicity: number;
}

export interface ProfileSample {
  f: number;
  radiusKm: number;
  tau: number;
  centerLat: number;
  centerLon: number;
}

export interface ProfileOptions extends SearchOptions {
  fs?: number[];
  fit?: "global" | `segments:${number}`;
  c50?: boolean;
}

export interface ProfileResult {
  samples: ProfileSample[];
  r1Km: number;
  fit?: unknown;
  c50?: { value: number; interpolated: boolean };
}

export interface CentreRecord {
  method: string;
  lat: number;
  lon: number;
  bachiKm: number;
}

// ---------------------------------------------------------------------------
// grid handles

let workDir: string | undefined;

function sessionDir(): string {
  if (!workDir) {
    workDir = fs.mkdtempSync(path.join(os.tmpdir(), "vpcircle-"));
  }
  return workDir;
}

function scratch(name: string): string {
  const stamp = `${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 8)}`;
  return path.join(sessionDir(), `${stamp}-${name}`);
}

function parseEsriHeader(text: string): { spec: GridSpec; dataStart: number; nodata?: number } {
  const lines = text.split(/\r?\n/);
  const header: Record<string, number> = {};
  let i = 0;
  for (; i < lines.length; i++) {
    const parts = lines[i].trim().split(/\s+/);
    if (parts.length === 2 && /^[A-Za-z]/.test(parts[0])) {
      header[parts[0].toLowerCase()] = Number(parts[1]);
    } else {
      break;
    }
  }
  for (const key of ["ncols", "nrows", "xllcorner", "yllcorner", "cellsize"]) {
    if (!(key in header) || Number.isNaN(header[key])) {
      throw new VpCliError(`malformed ESRI ASCII header: missing ${key}`, "input", 2);
    }
  }
  const cell = header.cellsize;
  return {
    spec: {
      nRows: header.nrows,
      nCols: header.ncols,
      lat0: header.yllcorner + (header.nrows - 0.5) * cell,
      lon0: header.xllcorner + cell / 2,
      cellDeg: cell,
    },
    dataStart: i,
    nodata: header.nodata_value,
  };
}

function readCounts(text: string): { spec: GridSpec; counts: number[][] } {
  const { spec, dataStart, nodata } = parseEsriHeader(text);
  const lines = text.split(/\r?\n/);
  const counts: number[][] = [];
  for (let r = 0; r < spec.nRows; r++) {
    const row = lines[dataStart + r].trim().split(/\s+/).map(Number);
    for (let c = 0; c < row.length; c++) {
      if (row[c] === nodata || row[c] < 0 || !Number.isFinite(row[c])) row[c] = 0;
    }
    counts.push(row);
  }
  return { spec, counts };
}

/**
 * Row-by-row left-to-right sum, matching the accumulation order the core
 * uses for its cached total, so the numbers agree double-for-double.
 */
function sequentialTotal(counts: number[][]): number {
  let total = 0;
  for (const row of counts) {
    let rowSum = 0;
    for (const v of row) rowSum += v;
    total += rowSum;
  }
  return total;
}

/** Open an existing ESRI ASCII raster. */
export function loadEsriAscii(ascPath: string): BoundGrid {
  const text = fs.readFileSync(ascPath, "utf8");
  const { spec, counts } = readCounts(text);
  return { ascPath: path.resolve(ascPath), spec, fileTotal: sequentialTotal(counts) };
}

export function writeEsriAscii(spec: GridSpec, counts: number[][], outPath: string): void {
  const lines = [
    `ncols ${spec.nCols}`,
    `nrows ${spec.nRows}`,
    `xllcorner ${spec.lon0 - spec.cellDeg / 2}`,
    `yllcorner ${spec.lat0 - (spec.nRows - 0.5) * spec.cellDeg}`,
    `cellsize ${spec.cellDeg}`,
    `NODATA_value -9999`,
  ];
  for (const row of counts) lines.push(row.join(" "));
  fs.writeFileSync(outPath, lines.join("\n") + "\n");
}

/** Build a grid handle from in-memory counts. */
export function gridFromCounts(spec: GridSpec, counts: number[][]): BoundGrid {
  const out = scratch("grid.asc");
  writeEsriAscii(spec, counts, out);
  return { ascPath: out, spec, fileTotal: sequentialTotal(counts) };
}

function normLon(lon: number): number {
  return ((((lon + 180) % 360) + 360) % 360) - 180;
}

/**
 * Sum `lat,lon,population` CSV rows (header line required) into the
 * owning cells of `spec`.  Duplicates are additive; a point exactly
 * halfway between two cell centres goes to the northern row / western
 * column — the same documented rules the raster format follows.
 */
export function loadCsv(csvPath: string, spec: GridSpec): BoundGrid {
  const counts: number[][] = Array.from({ length: spec.nRows }, () =>
    new Array<number>(spec.nCols).fill(0));
  const lines = fs.readFileSync(csvPath, "utf8").split(/\r?\n/);
  const wraps = Math.abs(spec.nCols * spec.cellDeg - 360) < 1e-9;
  for (let i = 1; i < lines.length; i++) {
    if (!lines[i].trim()) continue;
    const parts = lines[i].split(",");
    if (parts.length < 3) {
      throw new VpCliError(`${csvPath}:${i + 1}: expected lat,lon,population`, "input", 2);
    }
    const [lat, lon, pop] = parts.map(Number);
    if ([lat, lon, pop].some(Number.isNaN)) {
      throw new VpCliError(`${csvPath}:${i + 1}: non-numeric value`, "input", 2);
    }
    const r = Math.ceil((spec.lat0 - lat) / spec.cellDeg - 0.5);
    let c = Math.ceil(((normLon(lon) - spec.lon0 + 360) % 360) / spec.cellDeg - 0.5);
    if (wraps) c = ((c % spec.nCols) + spec.nCols) % spec.nCols;
    const latOk = r >= 0 && r < spec.nRows &&
      Math.abs(spec.lat0 - r * spec.cellDeg - lat) <= spec.cellDeg / 2 + 1e-9;
    if (!latOk || c < 0 || c >= spec.nCols) {
      throw new VpCliError(`${csvPath}:${i + 1}: point (${lat}, ${lon}) outside grid`, "input", 2);
    }
    counts[r][c] += Math.max(pop, 0);
  }
  return gridFromCounts(spec, counts);
}

/** Restrict a grid to a GeoJSON polygon mask (resolved by the CLI). */
export function applyMask(grid: BoundGrid, geojsonPath: string): BoundGrid {
  return { ...grid, maskPath: path.resolve(geojsonPath), bbox: undefined };
}

/** Restrict a grid to a lat/lon bounding box (resolved by the CLI). */
export function applyBbox(grid: BoundGrid, bbox: BoundingBox): BoundGrid {
  return { ...grid, bbox, maskPath: undefined };
}

// ---------------------------------------------------------------------------
// CLI plumbing

function run(args: string[]): void {
  const [cmd, ...pre] = cliCommand();
  const proc = spawnSync(cmd, [...pre, ...args], { encoding: "utf8" });
  if (proc.error) {
    throw new VpCliError(`failed to launch CLI: ${proc.error.message}`, "io", 2);
  }
  if (proc.status !== 0) {
    const line = (proc.stderr ?? "").trim().split("\n").pop() ?? "";
    try {
      const parsed = JSON.parse(line);
      throw new VpCliError(parsed.message, parsed.code, proc.status ?? 2);
    } catch (err) {
      if (err instanceof VpCliError) throw err;
      throw new VpCliError(`CLI failed (exit ${proc.status}): ${line}`, "error", proc.status ?? 2);
    }
  }
}

function inputArgs(grid: BoundGrid): string[] {
  const args = ["--input", grid.ascPath];
  if (grid.maskPath) args.push("--mask", grid.maskPath);
  if (grid.bbox) {
    const { south, west, north, east } = grid.bbox;
    args.push("--bbox", `${south},${west},${north},${east}`);
  }
  return args;
}

function searchArgs(options: SearchOptions): string[] {
  const args: string[] = [];
  if (options.epsKm !== undefined) args.push("--eps-km", String(options.epsKm));
  if (options.coarse !== undefined) args.push("--coarse", String(options.coarse));
  if (options.windowDeg !== undefined) args.push("--window-deg", String(options.windowDeg));
  if (options.threads !== undefined) args.push("--threads", String(options.threads));
  return args;
}

function parseCsv(filePath: string): Record<string, string>[] {
  const lines = fs.readFileSync(filePath, "utf8").trim().split("\n");
  const header = lines[0].split(",");
  return lines.slice(1).map((line) => {
    const cells = line.split(",");
    return Object.fromEntries(header.map((name, i) => [name, cells[i]]));
  });
}

// ---------------------------------------------------------------------------
// operations

/** Smallest circles containing each fraction of the population. */
export function vp(grid: BoundGrid, fs_: number[], options: SearchOptions = {}): VpRecord[] {
  const out = scratch("vp.csv");
  const args = ["vp", ...inputArgs(grid), ...searchArgs(options),
    "--f", fs_.join(","), "--out", out];
  if (options.exact) args.push("--exact");
  run(args);
  return parseCsv(out).map((row) => ({
    f: Number(row.f),
    centerLat: Number(row.center_lat),
    centerLon: Number(row.center_lon),
    radiusKm: Number(row.radius_km),
    population: Number(row.population),
    target: Number(row.target),
    multiplicity: Number(row.multiplicity),
  }));
}

/** tau(f) profile with optional power-law fit and C50. */
export function profile(grid: BoundGrid, options: ProfileOptions = {}): ProfileResult {
  const out = scratch("profile.csv");
  const args = ["profile", ...inputArgs(grid), ...searchArgs(options), "--out", out];
  if (options.fs) args.push("--fs", options.fs.join(","));
  if (options.fit) args.push("--fit", options.fit);
  if (options.c50) args.push("--c50");
  run(args);
  const samples = parseCsv(out).map((row) => ({
    f: Number(row.f),
    radiusKm: Number(row.radius_km),
    tau: Number(row.tau),
    centerLat: Number(row.center_lat),
    centerLon: Number(row.center_lon),
  }));
  const summary = JSON.parse(fs.readFileSync(`${out}.fit.json`, "utf8"));
  return { samples, r1Km: summary.r1_km, fit: summary.fit, c50: summary.c50 };
}

/** Classical population centres with Bachi standard distances. */
export function centers(grid: BoundGrid): CentreRecord[] {
  const out = scratch("centers.csv");
  run(["centers", ...inputArgs(grid), "--out", out]);
  return parseCsv(out).map((row) => ({
    method: row.method,
    lat: Number(row.lat),
    lon: Number(row.lon),
    bachiKm: Number(row.bachi_km),
  }));
}

/** Materialize a disc-model raster through the synth subcommand. */
export function synth(params: {
  rho0: number; r0Km: number; a: number; riKm: number;
  centerLat: number; centerLon: number; cellDeg: number; extentDeg?: number;
}): BoundGrid {
  const out = scratch("synth.asc");
  const args = ["synth", "--rho0", String(params.rho0), "--r0-km", String(params.r0Km),
    "--a", String(params.a), "--ri-km", String(params.riKm),
    "--center", `${params.centerLat},${params.centerLon}`,
    "--cell-deg", String(params.cellDeg), "--out", out];
  if (params.extentDeg !== undefined) args.push("--extent-deg", String(params.extentDeg));
  run(args);
  return loadEsriAscii(out);
}
