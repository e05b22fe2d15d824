import { createHash } from "node:crypto";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { SchemaError } from "../src/csv.js";
import { renderFigure, splitRuns } from "../src/figures.js";
import { loadSpec } from "../src/spec.js";

const SPECS = ["tau1_native", "expcos_native", "expcos_surrogate", "expcos_sweep"];

function render(name: string): string {
  return renderFigure(loadSpec(`test/specs/${name}.json`));
}

describe("deterministic rendering", () => {
  it.each(SPECS)("%s renders byte-identically twice", (name) => {
    const a = render(name);
    const b = render(name);
    expect(a).toBe(b);
    expect(a.startsWith("<svg")).toBe(true);
    expect(a.length).toBeGreaterThan(2000);
  });

  it("inputs are not mutated by rendering", () => {
    const path = "test/fixtures/tau1_native_errmap.csv";
    const before = createHash("sha256").update(readFileSync(path)).digest("hex");
    render("tau1_native");
    const after = createHash("sha256").update(readFileSync(path)).digest("hex");
    expect(after).toBe(before);
  });
});

describe("contour levels", () => {
  it("measured contours sit on even decades two apart", () => {
    const svg = render("tau1_native");
    const levels = [...svg.matchAll(/data-level="(-?\d+)"/g)]
      .map((m) => Number(m[1]));
    expect(levels.length).toBeGreaterThan(3);
    const uniq = [...new Set(levels)].sort((a, b) => a - b);
    for (const l of uniq) expect(Math.abs(l % 2)).toBe(0);
    for (let i = 1; i < uniq.length; i++) {
      expect((uniq[i] - uniq[i - 1]) % 2).toBe(0);
    }
  });

  it("predicted contours are drawn as thick overlays", () => {
    const svg = render("tau1_native");
    const eps = [...svg.matchAll(/data-predicted-eps="([^"]+)"/g)]
      .map((m) => m[1].split(":")[0]);
    expect(new Set(eps).size).toBeGreaterThanOrEqual(4);
    expect(svg).toContain('stroke-width="2.2"');
  });
});

describe("error handling", () => {
  it("rejects a schema-mismatched error map", () => {
    const dir = mkdtempSync(join(tmpdir(), "figkit-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "a,b,c\n1,2,3\n");
    const spec = loadSpec("test/specs/expcos_native.json");
    spec.errmap_csv = bad;
    expect(() => renderFigure(spec)).toThrow(SchemaError);
  });

  it("rejects overlay requests without overlay data", () => {
    const dir = mkdtempSync(join(tmpdir(), "figkit-"));
    const path = join(dir, "spec.json");
    writeFileSync(path, JSON.stringify({
      figure: "error-map",
      errmap_csv: "test/fixtures/tau1_native_errmap.csv",
      show: ["predicted_contours"],
    }));
    expect(() => loadSpec(path)).toThrow(SchemaError);
  });

  it("rejects unknown overlay names and figure ids", () => {
    const dir = mkdtempSync(join(tmpdir(), "figkit-"));
    const path = join(dir, "spec.json");
    writeFileSync(path, JSON.stringify({ figure: "pie" }));
    expect(() => loadSpec(path)).toThrow(SchemaError);
  });
});

describe("empty-mask grids", () => {
  it("renders geometry only when every cell is excluded", () => {
    const dir = mkdtempSync(join(tmpdir(), "figkit-"));
    const csv = join(dir, "empty.csv");
    const rows = ["# config_hash=abc", "ix,iy,x,y,re,im,mask,method,log10err"];
    for (let iy = 0; iy < 3; iy++) {
      for (let ix = 0; ix < 3; ix++) {
        rows.push(`${ix},${iy},${ix * 0.1},${iy * 0.1},,,excluded,none,`);
      }
    }
    writeFileSync(csv, rows.join("\n") + "\n");
    const spec = loadSpec("test/specs/expcos_native.json");
    spec.errmap_csv = csv;
    const svg = renderFigure(spec);
    expect(svg).not.toContain('data-cell="1"');
    expect(svg).toContain("polyline");     // boundary overlay still present
  });
});

describe("heatmap", () => {
  it("draws one cell per sweep row", () => {
    const svg = render("expcos_sweep");
    const cells = [...svg.matchAll(/data-cell="1"/g)].length;
    const lines = readFileSync("test/fixtures/expcos_sweep.csv", "utf8")
      .trim().split("\n").length - 2;
    expect(cells).toBe(lines);
  });
});

describe("splitRuns", () => {
  it("breaks polylines at trimmed gaps", () => {
    const pts: [number, number][] = [];
    for (let i = 0; i < 10; i++) pts.push([i * 0.01, 0]);
    for (let i = 0; i < 10; i++) pts.push([1 + i * 0.01, 0]);
    const runs = splitRuns(pts);
    expect(runs.length).toBe(2);
    expect(runs[0].length).toBe(10);
  });
});
