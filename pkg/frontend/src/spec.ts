/** Figure specification: what to draw, from which files, with which overlays. */

import { readFileSync } from "node:fs";

import { SchemaError } from "./csv.js";

export type OverlayName =
  | "predicted_contours"
  | "boxes"
  | "centers"
  | "schwarz"
  | "gamma_bad"
  | "boundary";

export interface FigureSpec {
  figure: "error-map" | "heatmap";
  title?: string;
  errmap_csv?: string;
  sweep_csv?: string;
  contours_csv?: string;
  overlays_json?: string;
  scale_min: number; // log10 color range
  scale_max: number;
  show: OverlayName[];
}

const OVERLAY_NAMES = new Set([
  "predicted_contours",
  "boxes",
  "centers",
  "schwarz",
  "gamma_bad",
  "boundary",
]);

export function loadSpec(path: string): FigureSpec {
  const obj = JSON.parse(readFileSync(path, "utf8"));
  if (obj.figure !== "error-map" && obj.figure !== "heatmap") {
    throw new SchemaError(`figure must be error-map or heatmap, got ${obj.figure}`);
  }
  const show: OverlayName[] = obj.show ?? [];
  for (const name of show) {
    if (!OVERLAY_NAMES.has(name)) {
      throw new SchemaError(`unknown overlay: ${name}`);
    }
  }
  const spec: FigureSpec = {
    figure: obj.figure,
    title: obj.title,
    errmap_csv: obj.errmap_csv,
    sweep_csv: obj.sweep_csv,
    contours_csv: obj.contours_csv,
    overlays_json: obj.overlays_json,
    scale_min: obj.scale_min ?? -16,
    scale_max: obj.scale_max ?? 0,
    show,
  };
  if (spec.figure === "error-map" && !spec.errmap_csv) {
    throw new SchemaError("error-map figure needs errmap_csv");
  }
  if (spec.figure === "heatmap" && !spec.sweep_csv) {
    throw new SchemaError("heatmap figure needs sweep_csv");
  }
  if (spec.show.includes("predicted_contours") && !spec.contours_csv) {
    throw new SchemaError("predicted_contours overlay needs contours_csv");
  }
  const geomOverlays = spec.show.filter((s) => s !== "predicted_contours");
  if (geomOverlays.length > 0 && !spec.overlays_json) {
    throw new SchemaError(`${geomOverlays[0]} overlay needs overlays_json`);
  }
  if (!(spec.scale_min < spec.scale_max)) {
    throw new SchemaError("scale_min must be below scale_max");
  }
  return spec;
}
