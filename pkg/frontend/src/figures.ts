/** Figure builders: deterministic SVG from parsed CSV/JSON data. */

import { contours } from "d3-contour";

import {
  ErrMapGrid,
  ContourPoint,
  Overlays,
  SweepRow,
  readContours,
  readErrMap,
  readOverlays,
  readSweep,
  SchemaError,
} from "./csv.js";
import { FigureSpec } from "./spec.js";
import { colormap, Frame, Svg, fmt } from "./svg.js";

const W = 640;
const H = 560;
const PLOT = { px: 60, py: 40, pw: 480, ph: 460 };

function evenLevels(lo: number, hi: number): number[] {
  const out: number[] = [];
  for (let l = Math.ceil(lo / 2) * 2; l < hi; l += 2) out.push(l);
  return out;
}

function colorbar(svg: Svg, lo: number, hi: number): void {
  const x = PLOT.px + PLOT.pw + 18;
  const y0 = PLOT.py;
  const h = PLOT.ph;
  const n = 64;
  for (let i = 0; i < n; i++) {
    const t = (i + 0.5) / n;
    svg.add("rect", {
      x,
      y: y0 + h - ((i + 1) * h) / n,
      width: 16,
      height: h / n + 0.5,
      fill: colormap(t),
      stroke: "none",
    });
  }
  for (const l of evenLevels(lo, hi + 1e-9)) {
    const t = (l - lo) / (hi - lo);
    svg.text(x + 20, y0 + h - t * h + 4, `1e${l}`);
  }
}

function drawPolyline(
  svg: Svg,
  frame: Frame,
  pts: [number, number][],
  attrs: Record<string, string | number>,
): void {
  if (pts.length > 1) svg.polyline(frame.map(pts), attrs);
}

/** Split trimmed contour samples into continuous runs at large gaps. */
export function splitRuns(pts: [number, number][]): [number, number][][] {
  if (pts.length < 2) return pts.length ? [pts] : [];
  const gaps = pts.slice(1).map((p, i) => Math.hypot(p[0] - pts[i][0], p[1] - pts[i][1]));
  const med = [...gaps].sort((a, b) => a - b)[Math.floor(gaps.length / 2)] || 1;
  const runs: [number, number][][] = [[pts[0]]];
  for (let i = 1; i < pts.length; i++) {
    if (gaps[i - 1] > 8 * med) runs.push([]);
    runs[runs.length - 1].push(pts[i]);
  }
  return runs.filter((r) => r.length > 1);
}

function drawPredictedContours(svg: Svg, frame: Frame, rows: ContourPoint[]): void {
  const groups = new Map<string, [number, number][]>();
  for (const r of rows) {
    const key = `${r.epsilon}:${r.alpha >= 0 ? "+" : "-"}`;
    if (!groups.has(key)) groups.set(key, []);
    groups.get(key)!.push([r.x, r.y]);
  }
  const keys = [...groups.keys()].sort();
  for (const key of keys) {
    for (const run of splitRuns(groups.get(key)!)) {
      drawPolyline(svg, frame, run, {
        stroke: "black",
        "stroke-width": 2.2,
        "data-predicted-eps": key,
      });
    }
  }
}

function drawOverlays(svg: Svg, frame: Frame, spec: FigureSpec, ov: Overlays): void {
  if (spec.show.includes("boxes")) {
    for (const box of ov.boxes) {
      drawPolyline(svg, frame, box, { stroke: "#999999", "stroke-width": 0.6 });
    }
  }
  if (spec.show.includes("gamma_bad")) {
    drawPolyline(svg, frame, ov.gamma_bad, {
      stroke: "black",
      "stroke-width": 0.8,
      "stroke-dasharray": "3,3",
    });
  }
  if (spec.show.includes("boundary")) {
    drawPolyline(svg, frame, ov.boundary, { stroke: "black", "stroke-width": 1.4 });
  }
  if (spec.show.includes("centers")) {
    for (const [x, y] of ov.centers) {
      svg.add("circle", { cx: frame.X(x), cy: frame.Y(y), r: 1.6, fill: "#444444" });
    }
  }
  if (spec.show.includes("schwarz")) {
    for (const [x, y] of ov.schwarz) {
      const X = frame.X(x);
      const Y = frame.Y(y);
      svg.path(`M${fmt(X - 4)} ${fmt(Y)}H${fmt(X + 4)}M${fmt(X)} ${fmt(Y - 4)}V${fmt(Y + 4)}`, {
        stroke: "#cc0000",
        "stroke-width": 1.2,
      });
    }
  }
}

export function renderErrorMap(spec: FigureSpec): string {
  const grid = readErrMap(spec.errmap_csv!);
  const lo = spec.scale_min;
  const hi = spec.scale_max;
  const dx = grid.nx > 1 ? grid.xs[1] - grid.xs[0] : 1;
  const dy = grid.ny > 1 ? grid.ys[1] - grid.ys[0] : 1;
  const frame = new Frame(
    grid.xs[0] - dx / 2,
    grid.xs[grid.nx - 1] + dx / 2,
    grid.ys[0] - dy / 2,
    grid.ys[grid.ny - 1] + dy / 2,
    PLOT.px,
    PLOT.py,
    PLOT.pw,
    PLOT.ph,
  );
  const svg = new Svg(W, H);
  if (spec.title) svg.text(PLOT.px, 24, spec.title, { "font-size": 14 });
  svg.add("desc", {}, `config_hash=${grid.configHash}`);

  // filled cells
  const filler = lo - 10;
  const values = new Float64Array(grid.nx * grid.ny).fill(filler);
  let nShown = 0;
  svg.group({ "data-layer": "cells", stroke: "none" }, () => {
    for (const c of grid.cells) {
      const iy = grid.ys.indexOf(c.y);
      const ix = grid.xs.indexOf(c.x);
      if (c.log10err === null || c.mask === "excluded") continue;
      values[iy * grid.nx + ix] = Math.max(lo, Math.min(hi, c.log10err));
      nShown += 1;
      const t = (values[iy * grid.nx + ix] - lo) / (hi - lo);
      svg.add("rect", {
        x: frame.X(c.x - dx / 2),
        y: frame.Y(c.y + dy / 2),
        width: dx * frame.sx + 0.4,
        height: dy * frame.sy + 0.4,
        fill: colormap(t),
        "data-cell": "1",
      });
    }
  });

  // measured thin contours every two decades
  if (nShown > 0) {
    const gen = contours()
      .size([grid.nx, grid.ny])
      .thresholds(evenLevels(lo, hi));
    svg.group({ "data-layer": "contours" }, () => {
      for (const poly of gen(Array.from(values))) {
        const d: string[] = [];
        for (const ring of poly.coordinates.flat(1)) {
          (ring as [number, number][]).forEach(([gx, gy], i) => {
            const x = frame.X(grid.xs[0] + (gx - 0.5) * dx);
            const y = frame.Y(grid.ys[0] + (gy - 0.5) * dy);
            d.push(`${i === 0 ? "M" : "L"}${fmt(x)} ${fmt(y)}`);
          });
        }
        if (d.length) {
          svg.path(d.join(""), {
            stroke: "black",
            "stroke-width": 0.6,
            "data-level": poly.value,
          });
        }
      }
    });
  }

  if (spec.show.includes("predicted_contours")) {
    drawPredictedContours(svg, frame, readContours(spec.contours_csv!));
  }
  const geom = spec.show.filter((s) => s !== "predicted_contours");
  if (geom.length > 0) {
    drawOverlays(svg, frame, spec, readOverlays(spec.overlays_json!));
  }
  colorbar(svg, lo, hi);
  return svg.render();
}

export function renderHeatmap(spec: FigureSpec): string {
  const rows = readSweep(spec.sweep_csv!);
  if (rows.length === 0) throw new SchemaError("sweep table is empty");
  const ps = [...new Set(rows.map((r) => r.p))].sort((a, b) => a - b);
  const betas = [...new Set(rows.map((r) => r.beta))].sort((a, b) => a - b);
  const lo = spec.scale_min;
  const hi = spec.scale_max;
  const svg = new Svg(W, H);
  if (spec.title) svg.text(PLOT.px, 24, spec.title, { "font-size": 14 });
  const cw = PLOT.pw / ps.length;
  const ch = PLOT.ph / betas.length;
  svg.group({ "data-layer": "cells", stroke: "none" }, () => {
    for (const r of rows) {
      const i = ps.indexOf(r.p);
      const j = betas.indexOf(r.beta);
      const v = Math.max(lo, Math.min(hi, Math.log10(r.maxRelErr)));
      svg.add("rect", {
        x: PLOT.px + i * cw,
        y: PLOT.py + PLOT.ph - (j + 1) * ch,
        width: cw + 0.4,
        height: ch + 0.4,
        fill: colormap((v - lo) / (hi - lo)),
        "data-cell": "1",
        "data-p": r.p,
        "data-beta": r.beta,
      });
    }
  });
  for (const [i, p] of ps.entries()) {
    svg.text(PLOT.px + (i + 0.5) * cw - 6, PLOT.py + PLOT.ph + 16, String(p));
  }
  for (const [j, b] of betas.entries()) {
    svg.text(PLOT.px - 34, PLOT.py + PLOT.ph - (j + 0.5) * ch + 4, String(b));
  }
  svg.text(PLOT.px + PLOT.pw / 2 - 4, PLOT.py + PLOT.ph + 34, "p");
  svg.text(PLOT.px - 46, PLOT.py + PLOT.ph / 2, "beta");
  colorbar(svg, lo, hi);
  return svg.render();
}

export function renderFigure(spec: FigureSpec): string {
  return spec.figure === "error-map" ? renderErrorMap(spec) : renderHeatmap(spec);
}
