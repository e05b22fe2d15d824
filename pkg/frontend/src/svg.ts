/** Minimal deterministic SVG builder: fixed number formatting, no state. */

export function fmt(v: number): string {
  if (v === 0) return "0";
  const s = v.toPrecision(8);
  return s.includes(".") || s.includes("e")
    ? s.replace(/\.?0+($|e)/, "$1")
    : s;
}

export class Svg {
  private parts: string[] = [];

  constructor(
    readonly width: number,
    readonly height: number,
  ) {}

  add(tag: string, attrs: Record<string, string | number>, body = ""): void {
    const a = Object.entries(attrs)
      .map(([k, v]) => `${k}="${typeof v === "number" ? fmt(v) : v}"`)
      .join(" ");
    this.parts.push(body ? `<${tag} ${a}>${body}</${tag}>` : `<${tag} ${a}/>`);
  }

  group(attrs: Record<string, string | number>, build: () => void): void {
    const a = Object.entries(attrs)
      .map(([k, v]) => `${k}="${typeof v === "number" ? fmt(v) : v}"`)
      .join(" ");
    this.parts.push(`<g ${a}>`);
    build();
    this.parts.push("</g>");
  }

  polyline(pts: [number, number][], attrs: Record<string, string | number>): void {
    const d = pts.map(([x, y]) => `${fmt(x)},${fmt(y)}`).join(" ");
    this.add("polyline", { points: d, fill: "none", ...attrs });
  }

  path(d: string, attrs: Record<string, string | number>): void {
    this.add("path", { d, fill: "none", ...attrs });
  }

  text(x: number, y: number, s: string, attrs: Record<string, string | number> = {}): void {
    this.add(
      "text",
      { x, y, "font-family": "sans-serif", "font-size": 11, ...attrs },
      s,
    );
  }

  render(): string {
    return (
      `<svg xmlns="http://www.w3.org/2000/svg" width="${this.width}" ` +
      `height="${this.height}" viewBox="0 0 ${this.width} ${this.height}">\n` +
      this.parts.join("\n") +
      "\n</svg>\n"
    );
  }
}

/** Affine map from data coordinates to pixel coordinates (y flipped). */
export class Frame {
  readonly sx: number;
  readonly sy: number;

  constructor(
    readonly x0: number,
    readonly x1: number,
    readonly y0: number,
    readonly y1: number,
    readonly px: number,
    readonly py: number,
    readonly pw: number,
    readonly ph: number,
  ) {
    this.sx = pw / (x1 - x0);
    this.sy = ph / (y1 - y0);
  }

  X(x: number): number {
    return this.px + (x - this.x0) * this.sx;
  }

  Y(y: number): number {
    return this.py + (this.y1 - y) * this.sy;
  }

  map(pts: [number, number][]): [number, number][] {
    return pts.map(([x, y]) => [this.X(x), this.Y(y)]);
  }
}

/** Small viridis-style colormap over [0, 1]. */
const STOPS: [number, number, number][] = [
  [68, 1, 84],
  [71, 44, 122],
  [59, 81, 139],
  [44, 113, 142],
  [33, 144, 141],
  [39, 173, 129],
  [92, 200, 99],
  [170, 220, 50],
  [253, 231, 37],
];

export function colormap(t: number): string {
  const u = Math.min(1, Math.max(0, t)) * (STOPS.length - 1);
  const i = Math.min(STOPS.length - 2, Math.floor(u));
  const f = u - i;
  const c = STOPS[i].map((a, k) => Math.round(a + f * (STOPS[i + 1][k] - a)));
  return `rgb(${c[0]},${c[1]},${c[2]})`;
}
