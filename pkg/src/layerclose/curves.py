"""Analytic closed curves as truncated Fourier series, and their complexification.

A curve is Z(s) = sum_k c_k e^{iks}, 2*pi-periodic and counter-clockwise. Because
the stored series is entire, evaluation at complex parameter s (the analytic
continuation) is exact up to truncation, which is kept below 1e-15 relative.
Points in the plane are represented as complex numbers throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

TWO_PI = 2.0 * np.pi

# Default half-width of the parameter strip in which continuation is trusted.
DEFAULT_STRIP_LIMIT = 1.5


class StripLimitError(ValueError):
    """Requested |Im s| exceeds the curve's configured continuation strip."""


@dataclass(frozen=True)
class AnnulusSpec:
    """Half-width of a parameter strip and of its image annulus."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError("annulus half-width must be positive")


def _alpha_of(value) -> float:
    return value.alpha if isinstance(value, AnnulusSpec) else float(value)


@dataclass(frozen=True)
class Curve:
    """Closed analytic curve Z(s) = sum_{k=-K..K} coeffs[k+K] e^{iks}."""

    coeffs: np.ndarray            # complex, length 2K+1, index k = -K..K
    name: str = "curve"
    strip_limit: float = DEFAULT_STRIP_LIMIT
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def K(self) -> int:
        return (len(self.coeffs) - 1) // 2

    @property
    def wavenumbers(self) -> np.ndarray:
        K = self.K
        return np.arange(-K, K + 1)

    # -- evaluation -------------------------------------------------------

    def _series(self, s, deriv: int = 0) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        if np.any(np.abs(s.imag) > self.strip_limit + 1e-12):
            raise StripLimitError(
                f"|Im s| exceeds strip limit {self.strip_limit}")
        k = self.wavenumbers
        c = self.coeffs * (1j * k) ** deriv
        # Horner in w = e^{is}: sum c_k w^k = w^{-K} * poly(w)
        w = np.exp(1j * s)
        acc = np.full(s.shape, c[-1], dtype=complex)
        for ck in c[-2::-1]:
            acc = acc * w + ck
        out = acc * w ** (-self.K)
        return out if out.shape else out[()]

    def z(self, s):
        """Z(s) for real or complex parameter s."""
        return self._series(s, 0)

    def dz(self, s):
        """Z'(s)."""
        return self._series(s, 1)

    def ddz(self, s):
        """Z''(s)."""
        return self._series(s, 2)

    def speed(self, s):
        """|Z'(s)| for real s."""
        return np.abs(self._series(np.asarray(s, dtype=float), 1))

    def normal(self, s):
        """Outward unit normal at real s (counter-clockwise convention)."""
        zp = self._series(np.asarray(s, dtype=float), 1)
        return -1j * zp / np.abs(zp)

    def curvature(self, s):
        """Signed curvature kappa(s) = Im(Z'' conj(Z'))/|Z'|^3 at real s."""
        s = np.asarray(s, dtype=float)
        zp = self._series(s, 1)
        zpp = self._series(s, 2)
        return (zpp * np.conj(zp)).imag / np.abs(zp) ** 3

    def nodes(self, n: int) -> np.ndarray:
        """Trapezoid nodes s_j = 2*pi*j/n, j = 0..n-1."""
        return TWO_PI * np.arange(n) / n

    # -- derived geometry ---------------------------------------------------

    @property
    def signed_area(self) -> float:
        k = self.wavenumbers
        return float(np.pi * np.sum(k * np.abs(self.coeffs) ** 2))

    def _ensure_scales(self) -> None:
        if "diameter" in self._cache:
            return
        pts = self.z(self.nodes(512))
        dx = pts.real.max() - pts.real.min()
        dy = pts.imag.max() - pts.imag.min()
        self._cache["diameter"] = float(np.hypot(dx, dy))
        self._cache["min_speed"] = float(self.speed(self.nodes(2048)).min())

    def scale(self) -> float:
        self._ensure_scales()
        return self._cache["diameter"]

    def validate(self, n_sample: int = 2048) -> None:
        """Check positivity of the speed and simplicity on a dense sample."""
        s = self.nodes(n_sample)
        sp = self.speed(s)
        if sp.min() <= 0 or not np.all(np.isfinite(sp)):
            raise ValueError("curve speed |Z'| is not positive everywhere")
        pts = self.z(s)
        # crossing arcs force some pair of non-neighbor samples within a local
        # spacing of each other; neighbors (small true arc separation) are
        # excluded from the test
        h = sp * (TWO_PI / n_sample)
        al = np.cumsum(sp) * TWO_PI / n_sample
        total = al[-1]
        arc = np.abs(al[None, :] - al[:, None])
        arc = np.minimum(arc, total - arc)
        hsum = h[None, :] + h[:, None]
        dist = np.abs(pts[None, :] - pts[:, None])
        suspect = (arc > 3.0 * hsum) & (dist < 0.35 * hsum)
        if suspect.any() or polyline_self_intersects(pts):
            raise ValueError("curve appears to self-intersect")

    # -- serialization ------------------------------------------------------

    def to_json(self) -> str:
        return json.dumps({
            "name": self.name,
            "K": self.K,
            "coeffs": [[float(c.real), float(c.imag)] for c in self.coeffs],
            "orientation": "ccw",
        })

    @staticmethod
    def from_json(text: str) -> "Curve":
        obj = json.loads(text)
        coeffs = np.array([complex(re, im) for re, im in obj["coeffs"]])
        if len(coeffs) != 2 * obj["K"] + 1:
            raise ValueError("coefficient count does not match K")
        return Curve(coeffs=coeffs, name=obj.get("name", "curve"))


def _fourier_truncate(samples: np.ndarray, tol: float = 1e-15) -> np.ndarray:
    """Coefficients c_k, k=-K..K, of the sampled periodic function, trimmed."""
    n = len(samples)
    chat = np.fft.fft(samples) / n
    # reorder to k = -n/2+1 .. n/2-1 (drop the ambiguous Nyquist mode)
    k_max = n // 2 - 1
    ks = np.arange(-k_max, k_max + 1)
    c = chat[ks % n]
    cmax = np.abs(c).max()
    big = np.abs(c) > tol * cmax
    if not big.any():
        raise ValueError("degenerate curve samples")
    K = int(np.abs(ks[big]).max())
    sel = np.abs(ks) <= K
    return c[sel]


def curve_from_map(zfun: Callable[[np.ndarray], np.ndarray], name: str,
                   tol: float = 1e-15) -> Curve:
    """Curve from an analytic 2*pi-periodic map, with adaptive truncation.

    Doubles the sample count until the retained spectrum is resolved, i.e. the
    trimmed order K sits well inside the sampled band.
    """
    n = 64
    while True:
        s = TWO_PI * np.arange(n) / n
        c = _fourier_truncate(zfun(s), tol)
        K = (len(c) - 1) // 2
        if K < n // 2 - 2 or n >= 1 << 16:
            break
        n *= 2
    curve = Curve(coeffs=c, name=name)
    if curve.signed_area < 0:
        curve = Curve(coeffs=c[::-1].copy(), name=name)  # s -> -s flip
    curve.validate()
    return curve


def curve_from_polar(rfun: Callable[[np.ndarray], np.ndarray], name: str) -> Curve:
    """Curve r(theta) e^{i theta} for a positive analytic radial function."""
    return curve_from_map(lambda s: rfun(s) * np.exp(1j * s), name)


def builtin_curve(name: str, seed: int | None = None) -> Curve:
    """Construct one of the built-in test curves.

    kite        r(t) = 1 + 0.3 cos(3(t + 0.3 sin t))
    kite_bump   kite with a localized Gaussian bump in r at t = 3*pi/4
    random40    r(t) = 1 + sum_{n<=40} a_n cos nt + b_n sin nt, a,b ~ U[-0.04, 0.04]
    """
    if name == "kite":
        return curve_from_polar(
            lambda t: 1.0 + 0.3 * np.cos(3.0 * (t + 0.3 * np.sin(t))), name)
    if name == "kite_bump":
        tb = 3.0 * np.pi / 4.0

        def r(t):
            d = np.angle(np.exp(1j * (t - tb)))  # wrapped to (-pi, pi]
            return (1.0 + 0.3 * np.cos(3.0 * (t + 0.3 * np.sin(t)))
                    + 0.1 * np.exp(-d ** 2 / (2.0 * 0.05 ** 2)))

        return curve_from_polar(r, name)
    if name == "random40":
        if seed is None:
            raise ValueError("random40 requires a seed")
        rng = np.random.default_rng(seed)
        a = rng.uniform(-0.04, 0.04, 40)
        b = rng.uniform(-0.04, 0.04, 40)
        ns = np.arange(1, 41)

        def r(t):
            t = np.asarray(t)[..., None]
            return 1.0 + (a * np.cos(ns * t) + b * np.sin(ns * t)).sum(-1)

        return curve_from_polar(r, f"random40_seed{seed}")
    if name == "circle":
        return curve_from_polar(lambda t: np.ones_like(t), name)
    raise ValueError(f"unknown curve name: {name!r}")


# ---------------------------------------------------------------------------
# Preimages of plane points under Z
# ---------------------------------------------------------------------------

def _newton_zero(curve: Curve, starts: np.ndarray, fun, dfun,
                 target, tol: float, max_iter: int = 30) -> np.ndarray:
    """Vectorized Newton iteration; returns converged roots (unwrapped Re)."""
    s = starts.astype(complex).copy()
    lim = curve.strip_limit
    for _ in range(max_iter):
        f = fun(s) - target
        df = dfun(s)
        step = np.where(np.abs(df) > 1e-300, f / np.where(df == 0, 1, df), np.inf)
        s = s - step
        # keep iterates inside the strip so series evaluation stays valid
        s = s.real % TWO_PI + 1j * np.clip(s.imag, -lim, lim)
    res = np.abs(fun(s) - target)
    ok = np.isfinite(res) & (res < tol)
    return s[ok]


def _dedupe_roots(roots: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    out: list[complex] = []
    for r in roots:
        dup = False
        for q in out:
            d = abs(np.angle(np.exp(1j * (r.real - q.real)))) + abs(r.imag - q.imag)
            if d < tol:
                dup = True
                break
        if not dup:
            out.append(r)
    return np.array(out) if out else np.zeros(0, complex)


def preimages(curve: Curve, z: complex, strip_limit: float,
              n_starts: int = 0) -> np.ndarray:
    """All solutions of Z(s) = z with |Im s| < strip_limit, sorted by |Im s|.

    Newton multistart from a dense real-axis grid plus a few imaginary
    offsets; non-convergent starts are discarded, duplicates merged at 1e-9.
    """
    if strip_limit <= 0:
        raise ValueError("strip_limit must be positive")
    strip_limit = min(strip_limit, curve.strip_limit)
    if n_starts <= 0:
        n_starts = max(160, 4 * curve.K)
    t = TWO_PI * np.arange(n_starts) / n_starts
    offs = np.array([0.0, strip_limit / 3, -strip_limit / 3,
                     0.9 * strip_limit, -0.9 * strip_limit])
    starts = (t[:, None] + 1j * offs[None, :]).ravel()
    tol = 1e-12 * max(curve.scale(), 1e-30)
    roots = _newton_zero(curve, starts, curve.z, curve.dz, z, tol)
    roots = roots[np.abs(roots.imag) < strip_limit]
    roots = _dedupe_roots(roots)
    if len(roots) == 0:
        return roots
    return roots[np.argsort(np.abs(roots.imag), kind="stable")]


def nearest_preimage(curve: Curve, z: np.ndarray, n_guess: int = 0,
                     max_iter: int = 25) -> np.ndarray:
    """Fast per-target Newton from the nearest boundary sample.

    Returns one root of Z(s) = z per target (the locally nearest sheet), or
    nan+0j where Newton failed. Intended for collar points; deep targets may
    return a root outside any strip of interest, which callers filter by Im.
    """
    z = np.asarray(z, dtype=complex)
    if n_guess <= 0:
        n_guess = max(512, 8 * curve.K)
    tgrid = TWO_PI * np.arange(n_guess) / n_guess
    bpts = curve.z(tgrid)
    # nearest boundary sample per target, chunked to bound memory
    s = np.empty(z.shape, dtype=complex)
    flat = z.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for lo in range(0, len(flat), 4096):
        hi = min(lo + 4096, len(flat))
        d = np.abs(flat[lo:hi, None] - bpts[None, :])
        out[lo:hi] = tgrid[np.argmin(d, axis=1)]
    lim = curve.strip_limit
    tol = 1e-12 * max(curve.scale(), 1e-30)
    cur = out
    active = np.arange(flat.size)
    for _ in range(max_iter):
        f = curve.z(cur[active]) - flat[active]
        df = curve.dz(cur[active])
        step = f / np.where(np.abs(df) > 1e-300, df, 1.0)
        nxt = cur[active] - step
        cur[active] = nxt.real % TWO_PI + 1j * np.clip(nxt.imag, -lim, lim)
        active = active[np.abs(step) > 1e-14]
        if active.size == 0:
            break
    bad = np.abs(curve.z(cur) - flat) >= tol
    cur[bad] = np.nan
    s[...] = cur.reshape(z.shape)
    return s


def gamma_curve(curve: Curve, alpha, n_points: int) -> np.ndarray:
    """Polyline samples of Gamma_alpha = Z({t + i*alpha}), t uniform in [0, 2*pi).

    alpha may be a plain number or an AnnulusSpec.
    """
    t = TWO_PI * np.arange(n_points) / n_points
    return curve.z(t + 1j * _alpha_of(alpha))


def polyline_self_intersects(pts: np.ndarray, closed: bool = True) -> bool:
    """Exact segment-intersection scan of a polyline (O(n^2), vectorized)."""
    p = np.asarray(pts, dtype=complex)
    if closed:
        a = p
        b = np.roll(p, -1)
    else:
        a, b = p[:-1], p[1:]
    n = len(a)
    d = b - a
    i, j = np.triu_indices(n, k=2)
    if closed:  # first and last segments are neighbors too
        keep = ~((i == 0) & (j == n - 1))
        i, j = i[keep], j[keep]
    cross = lambda u, v: u.real * v.imag - u.imag * v.real
    denom = cross(d[i], d[j])
    rel = a[j] - a[i]
    with np.errstate(divide="ignore", invalid="ignore"):
        t = cross(rel, d[j]) / denom
        u = cross(rel, d[i]) / denom
    hit = (np.abs(denom) > 1e-300) & (t > 0) & (t < 1) & (u > 0) & (u < 1)
    return bool(np.any(hit))


def in_bad_region(curve: Curve, z: complex, alpha_bad,
                  side: str = "both") -> bool:
    """Whether z has a preimage with |Im s| < alpha_bad on the requested side."""
    if side not in ("interior", "exterior", "both"):
        raise ValueError("side must be interior|exterior|both")
    roots = preimages(curve, z, strip_limit=_alpha_of(alpha_bad))
    if len(roots) == 0:
        return False
    if side == "interior":
        return bool(np.any(roots.imag > 0))
    if side == "exterior":
        return bool(np.any(roots.imag < 0))
    return True


# ---------------------------------------------------------------------------
# Box cover of the bad annular neighborhood
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoxCover:
    """Partition of one side of the bad collar into images of s-rectangles.

    Box b (0-based) is the image of the rectangle
    [2*pi*(b-1/2)/n_boxes, 2*pi*(b+1/2)/n_boxes) x (0, alpha_bad] (interior
    side; mirrored imaginary range for the exterior). Centers sit at
    z0_b = Z(2*pi*b/n_boxes + i*alpha0*sign).
    """

    curve: Curve
    n_boxes: int
    alpha_bad: float
    alpha0: float
    side: str                      # interior | exterior
    centers: np.ndarray            # complex[n_boxes]
    radii: np.ndarray              # float[n_boxes]

    @property
    def im_sign(self) -> float:
        return 1.0 if self.side == "interior" else -1.0

    def box_centers_t(self) -> np.ndarray:
        return TWO_PI * np.arange(self.n_boxes) / self.n_boxes

    def boxes(self) -> list:
        """Per-box view: (t_lo, t_hi, center z0, radius R)."""
        w = TWO_PI / self.n_boxes
        return [((b - 0.5) * w, (b + 0.5) * w, complex(self.centers[b]),
                 float(self.radii[b])) for b in range(self.n_boxes)]

    def box_of_t(self, t) -> np.ndarray:
        """Box index for real parameter t (rectangle membership by rounding)."""
        return (np.rint(np.asarray(t) / (TWO_PI / self.n_boxes)).astype(int)
                % self.n_boxes)

    def box_of_preimage(self, s) -> np.ndarray:
        """Box index for preimage s, or -1 where s is outside this cover."""
        s = np.asarray(s, dtype=complex)
        imside = s.imag * self.im_sign
        ok = np.isfinite(s.real) & (imside > 0) & (imside <= self.alpha_bad)
        idx = np.where(ok, self.box_of_t(np.nan_to_num(s.real)), -1)
        return idx

    def width_of_box(self, b: int, n_sample: int = 8) -> float:
        """Local width of the bad annular neighborhood across box b.

        The neighborhood spans both sides of the boundary, so the width is
        measured between the two translated curves Gamma_{+-alpha_bad}.
        """
        w = TWO_PI / self.n_boxes
        t0 = TWO_PI * b / self.n_boxes
        t = t0 - w / 2 + w * (np.arange(n_sample) + 0.5) / n_sample
        return float(np.abs(self.curve.z(t + 1j * self.alpha_bad)
                            - self.curve.z(t - 1j * self.alpha_bad)).max())


def build_box_cover(curve: Curve, N: int, n_boxes: int | None = None,
                    alpha_bad: float | None = None,
                    alpha0: float | None = None,
                    side: str = "interior",
                    r_grid: int = 16) -> BoxCover:
    """Build the box cover with the default parameter choices.

    Defaults: n_boxes = ceil(N/5), alpha_bad = 10*pi/N, alpha0 = alpha_bad/2.
    """
    if side not in ("interior", "exterior"):
        raise ValueError("side must be interior or exterior")
    if alpha_bad is None:
        alpha_bad = 10.0 * np.pi / N
    if alpha0 is None:
        alpha0 = alpha_bad / 2.0
    if n_boxes is None:
        n_boxes = int(np.ceil(N / 5))
    if n_boxes < 1:
        raise ValueError("n_boxes must be >= 1")
    sgn = 1.0 if side == "interior" else -1.0
    tb = TWO_PI * np.arange(n_boxes) / n_boxes
    centers = curve.z(tb + 1j * sgn * alpha0)
    # radius by sampling each s-rectangle on an r_grid x r_grid lattice
    w = TWO_PI / n_boxes
    tt = np.linspace(-w / 2, w / 2, r_grid)
    aa = np.linspace(0.0, alpha_bad, r_grid)
    radii = np.empty(n_boxes)
    rect = tt[:, None] + 1j * sgn * aa[None, :]
    for b in range(n_boxes):
        pts = curve.z(tb[b] + rect)
        radii[b] = np.abs(pts - centers[b]).max()
    return BoxCover(curve=curve, n_boxes=n_boxes, alpha_bad=float(alpha_bad),
                    alpha0=float(alpha0), side=side, centers=centers,
                    radii=radii)


def distortion_gamma(curve: Curve, z0: complex, alpha0: float, R: float,
                     side: str = "interior", n_alpha: int = 20,
                     n_points: int = 1000) -> float:
    """Geometric distortion gamma = sup_a (R/d(Gamma_a, z0)) (alpha0-a)/alpha0.

    The supremum over a in (0, alpha0) is approximated on a midpoint grid of
    n_alpha values with n_points samples per translated curve.
    """
    sgn = 1.0 if side == "interior" else -1.0
    t = TWO_PI * np.arange(n_points) / n_points
    best = 0.0
    for i in range(n_alpha):
        a = alpha0 * (i + 0.5) / n_alpha
        d = np.abs(curve.z(t + 1j * sgn * a) - z0).min()
        val = (R / d) * (alpha0 - a) / alpha0
        best = max(best, float(val))
    return best


def cover_gammas(cover: BoxCover, n_alpha: int = 20,
                 n_points: int = 1000) -> np.ndarray:
    """Per-box distortion estimates for a cover."""
    return np.array([
        distortion_gamma(cover.curve, cover.centers[b], cover.alpha0,
                         cover.radii[b], side=cover.side,
                         n_alpha=n_alpha, n_points=n_points)
        for b in range(cover.n_boxes)])


def schwarz_singularities(curve: Curve, strip_limit: float) -> np.ndarray:
    """Roots of Z'(s) = 0 with |Im s| < strip_limit (diagnostic only)."""
    strip_limit = min(strip_limit, curve.strip_limit)
    n_t = max(96, 4 * curve.K)
    t = TWO_PI * np.arange(n_t) / n_t
    offs = np.linspace(-0.95 * strip_limit, 0.95 * strip_limit, 9)
    starts = (t[:, None] + 1j * offs[None, :]).ravel()
    scale = max(np.abs(curve.dz(curve.nodes(512))).max(), 1e-30)
    roots = _newton_zero(curve, starts, curve.dz, curve.ddz, 0.0, 1e-10 * scale)
    roots = roots[np.abs(roots.imag) < strip_limit]
    roots = _dedupe_roots(roots, tol=1e-8)
    if len(roots) == 0:
        return roots
    return roots[np.argsort(np.abs(roots.imag), kind="stable")]
