/** Strict readers for the layerclose CSV/JSON outputs. */

import { readFileSync } from "node:fs";

export class SchemaError extends Error {}

export interface ErrMapCell {
  ix: number;
  iy: number;
  x: number;
  y: number;
  mask: string;
  method: string;
  log10err: number | null;
}

export interface ErrMapGrid {
  nx: number;
  ny: number;
  xs: number[];
  ys: number[];
  cells: ErrMapCell[];
  configHash: string;
}

const ERRMAP_HEADER = ["ix", "iy", "x", "y", "re", "im", "mask", "method", "log10err"];

function splitLines(text: string): string[] {
  return text.split(/\r?\n/).filter((l) => l.length > 0);
}

function parseHash(line: string): string {
  const m = line.match(/^# config_hash=([0-9a-f]+)$/);
  return m ? m[1] : "";
}

export function readErrMap(path: string): ErrMapGrid {
  const lines = splitLines(readFileSync(path, "utf8"));
  let configHash = "";
  if (lines[0]?.startsWith("#")) {
    configHash = parseHash(lines.shift()!);
  }
  const header = lines.shift()?.split(",") ?? [];
  if (header.join(",") !== ERRMAP_HEADER.join(",")) {
    throw new SchemaError(`unexpected error-map header: ${header.join(",")}`);
  }
  const cells: ErrMapCell[] = [];
  for (const line of lines) {
    const f = line.split(",");
    if (f.length !== ERRMAP_HEADER.length) {
      throw new SchemaError(`bad error-map row: ${line}`);
    }
    const num = (s: string, name: string): number => {
      const v = Number(s);
      if (!Number.isFinite(v)) throw new SchemaError(`bad ${name}: ${s}`);
      return v;
    };
    cells.push({
      ix: num(f[0], "ix"),
      iy: num(f[1], "iy"),
      x: num(f[2], "x"),
      y: num(f[3], "y"),
      mask: f[6],
      method: f[7],
      log10err: f[8] === "" ? null : num(f[8], "log10err"),
    });
  }
  const xs = [...new Set(cells.map((c) => c.x))].sort((a, b) => a - b);
  const ys = [...new Set(cells.map((c) => c.y))].sort((a, b) => a - b);
  if (xs.length * ys.length !== cells.length) {
    throw new SchemaError("error-map rows do not form a full grid");
  }
  return { nx: xs.length, ny: ys.length, xs, ys, cells, configHash };
}

export interface ContourPoint {
  x: number;
  y: number;
  alpha: number;
  epsilon: number;
}

export function readContours(path: string): ContourPoint[] {
  const lines = splitLines(readFileSync(path, "utf8"));
  if (lines[0]?.startsWith("#")) lines.shift();
  const header = lines.shift();
  if (header !== "x,y,alpha,epsilon") {
    throw new SchemaError(`unexpected contour header: ${header}`);
  }
  return lines.map((line) => {
    const f = line.split(",").map(Number);
    if (f.length !== 4 || f.some((v) => !Number.isFinite(v))) {
      throw new SchemaError(`bad contour row: ${line}`);
    }
    return { x: f[0], y: f[1], alpha: f[2], epsilon: f[3] };
  });
}

export interface SweepRow {
  p: number;
  beta: number;
  maxRelErr: number;
  l2RelErr: number;
}

export function readSweep(path: string): SweepRow[] {
  const lines = splitLines(readFileSync(path, "utf8"));
  if (lines[0]?.startsWith("#")) lines.shift();
  const header = lines.shift();
  if (header !== "p,beta,max_rel_err,l2_rel_err") {
    throw new SchemaError(`unexpected sweep header: ${header}`);
  }
  return lines.map((line) => {
    const f = line.split(",").map(Number);
    if (f.length !== 4 || f.some((v) => !Number.isFinite(v))) {
      throw new SchemaError(`bad sweep row: ${line}`);
    }
    return { p: f[0], beta: f[1], maxRelErr: f[2], l2RelErr: f[3] };
  });
}

export interface Overlays {
  boundary: [number, number][];
  gamma_bad: [number, number][];
  centers: [number, number][];
  boxes: [number, number][][];
  schwarz: [number, number][];
}

function checkPolyline(v: unknown, name: string): [number, number][] {
  if (!Array.isArray(v)) throw new SchemaError(`overlay ${name} not an array`);
  for (const p of v) {
    if (!Array.isArray(p) || p.length !== 2 || p.some((q) => typeof q !== "number")) {
      throw new SchemaError(`overlay ${name} has a malformed point`);
    }
  }
  return v as [number, number][];
}

export function readOverlays(path: string): Overlays {
  const obj = JSON.parse(readFileSync(path, "utf8"));
  const boxes = obj.boxes;
  if (!Array.isArray(boxes)) throw new SchemaError("overlay boxes missing");
  return {
    boundary: checkPolyline(obj.boundary, "boundary"),
    gamma_bad: checkPolyline(obj.gamma_bad, "gamma_bad"),
    centers: checkPolyline(obj.centers, "centers"),
    boxes: boxes.map((b: unknown, i: number) => checkPolyline(b, `boxes[${i}]`)),
    schwarz: checkPolyline(obj.schwarz ?? [], "schwarz"),
  };
}
