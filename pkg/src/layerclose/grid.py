"""Rectangular evaluation grids with region masks and CSV serialization."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .curves import Curve, nearest_preimage
from .potentials import winding_number

MASK_OUTSIDE = "outside"
MASK_INSIDE = "inside"
MASK_COLLAR = "on-collar"
MASK_EXCLUDED = "excluded"


@dataclass
class GridSpec:
    x0: float
    x1: float
    dx: float
    y0: float
    y1: float
    dy: float

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        """Parse "x0:x1:dx,y0:y1:dy"."""
        try:
            xs, ys = text.split(",")
            x0, x1, dx = (float(v) for v in xs.split(":"))
            y0, y1, dy = (float(v) for v in ys.split(":"))
        except ValueError as exc:
            raise ValueError(f"bad grid spec {text!r}") from exc
        if dx <= 0 or dy <= 0 or x1 <= x0 or y1 <= y0:
            raise ValueError(f"bad grid spec {text!r}")
        return cls(x0, x1, dx, y0, y1, dy)

    def points(self):
        xs = np.arange(self.x0, self.x1 + 1e-12 * self.dx, self.dx)
        ys = np.arange(self.y0, self.y1 + 1e-12 * self.dy, self.dy)
        X, Y = np.meshgrid(xs, ys)
        return xs, ys, X + 1j * Y


@dataclass
class FieldGrid:
    """Evaluation results and masks on a rectangular grid (row-major in y)."""

    spec: GridSpec
    points: np.ndarray               # complex (ny, nx)
    mask: np.ndarray                 # string codes per cell
    values: np.ndarray               # complex, nan where excluded
    method: np.ndarray               # native | surrogate | split | none
    log10err: np.ndarray | None = None
    bdry_dist: np.ndarray | None = None

    @property
    def nx(self) -> int:
        return self.points.shape[1]

    @property
    def ny(self) -> int:
        return self.points.shape[0]

    def write_csv(self, path, config_hash: str = "") -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            if config_hash:
                w.writerow([f"# config_hash={config_hash}"])
            cols = ["ix", "iy", "x", "y", "re", "im", "mask", "method"]
            if self.log10err is not None:
                cols.append("log10err")
            w.writerow(cols)
            for iy in range(self.ny):
                for ix in range(self.nx):
                    z = self.points[iy, ix]
                    v = self.values[iy, ix]
                    row = [ix, iy, repr(float(z.real)), repr(float(z.imag)),
                           "" if np.isnan(v.real) else repr(float(v.real)),
                           "" if np.isnan(v.real) else repr(float(v.imag)),
                           self.mask[iy, ix], self.method[iy, ix]]
                    if self.log10err is not None:
                        e = self.log10err[iy, ix]
                        row.append("" if np.isnan(e) else repr(float(e)))
                    w.writerow(row)


def classify_grid(curve: Curve, pts: np.ndarray, alpha_bad: float):
    """Region mask, preimage, and boundary distance for each grid point."""
    s = nearest_preimage(curve, pts)
    im = np.where(np.isfinite(s.real), s.imag, np.nan)
    dist = np.full(pts.shape, np.inf)
    ok = np.isfinite(s.real)
    dist[ok] = np.abs(pts[ok] - curve.z(np.real(s[ok])))
    wind = winding_number(curve, pts)
    mask = np.where(wind == 1, MASK_INSIDE, MASK_OUTSIDE).astype(object)
    collar = ok & (np.abs(im) <= alpha_bad)
    mask[collar] = MASK_COLLAR
    # inside/outside of collar points decided by the preimage side
    return mask, s, dist, wind


def build_field_grid(curve: Curve, gspec: GridSpec, alpha_bad: float,
                     side: str) -> FieldGrid:
    """Grid with masks; cells on the non-requested side are excluded."""
    _, _, pts = gspec.points()
    mask, s, dist, wind = classify_grid(curve, pts, alpha_bad)
    onside = np.where(np.isfinite(s.real) & (np.abs(s.imag) <= alpha_bad),
                      np.where(s.imag > 0, "interior", "exterior"),
                      np.where(wind == 1, "interior", "exterior"))
    excluded = onside != side
    m = mask.copy()
    m[excluded] = MASK_EXCLUDED
    vals = np.full(pts.shape, np.nan + 1j * np.nan)
    meth = np.full(pts.shape, "none", dtype=object)
    return FieldGrid(spec=gspec, points=pts, mask=m, values=vals, method=meth,
                     bdry_dist=dist)
