"""Surrogate local expansions for accurate evaluation near the boundary.

Inside the bad collar each target is served by a local expansion (Taylor about
an off-boundary center for Laplace, Fourier-Bessel for Helmholtz) whose
coefficients come from an upsampled fine-node trapezoid rule; everywhere else
the native scheme is used.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .curves import Curve, BoxCover, build_box_cover, nearest_preimage, TWO_PI
from .potentials import (Kernel, Density, native_eval, interpolate_density,
                         trig_upsample)
from .specfun import bessel_j_orders, hankel1_orders


@dataclass(frozen=True)
class CloseEvalParams:
    """Expansion order, upsampling ratio and box-cover geometry.

    Defaults (applied against a density's N): alpha_bad = 10*pi/N,
    alpha0 = alpha_bad/2, n_boxes = ceil(N/5).
    """

    p: int
    beta: float
    n_boxes: int | None = None
    alpha_bad: float | None = None
    alpha0: float | None = None
    side: str = "interior"

    def __post_init__(self):
        if not 1 <= self.p <= 30:
            raise ValueError("p must be in [1, 30]")
        if not 1.0 <= self.beta <= 16.0:
            raise ValueError("beta must be in [1, 16]")
        if self.side not in ("interior", "exterior"):
            raise ValueError("side must be interior or exterior")

    def fine_count(self, N: int) -> int:
        return int(np.ceil(self.beta * N))

    def make_cover(self, curve: Curve, N: int) -> BoxCover:
        return build_box_cover(curve, N, n_boxes=self.n_boxes,
                               alpha_bad=self.alpha_bad, alpha0=self.alpha0,
                               side=self.side)


@dataclass
class LocalExpansion:
    """One surrogate expansion about center z0.

    laplace_taylor: coeffs[m], m = 0..p-1, of sum c_m (z-z0)^m.
    helmholtz_fb: coeffs[i] for m = -(p-1)..p-1 of sum c_m e^{im theta} J_m(w r).
    """

    center: complex
    kind: str
    omega: float
    coeffs: np.ndarray
    radius: float
    box_index: int = -1

    @property
    def p(self) -> int:
        if self.kind == "laplace_taylor":
            return len(self.coeffs)
        return (len(self.coeffs) + 1) // 2


@dataclass
class FineNodes:
    """Density and geometry resampled to the M fine trapezoid nodes."""

    s: np.ndarray
    z: np.ndarray
    dz: np.ndarray
    speed: np.ndarray
    normal: np.ndarray
    values: np.ndarray

    @classmethod
    def from_density(cls, density: Density, m: int) -> "FineNodes":
        curve = density.curve
        s = TWO_PI * np.arange(m) / m
        if density.interpolant == "trig":
            vals = trig_upsample(density.values, m)
        else:
            vals = interpolate_density(density, s)
        dz = curve.dz(s)
        return cls(s=s, z=curve.z(s), dz=dz, speed=np.abs(dz),
                   normal=-1j * dz / np.abs(dz), values=vals)


def _taylor_coeffs_dlp(fine: FineNodes, z0: complex, p: int,
                       sel=slice(None)) -> np.ndarray:
    m = len(fine.s)
    w = (1j / m) * (fine.values * fine.dz)[sel]
    r = 1.0 / (fine.z[sel] - z0)
    c = np.empty(p, dtype=complex)
    acc = w * r
    for k in range(p):
        c[k] = acc.sum()
        acc = acc * r
    return c


def _taylor_coeffs_slp(fine: FineNodes, z0: complex, p: int,
                       sel=slice(None)) -> np.ndarray:
    m = len(fine.s)
    w = (fine.values * fine.speed)[sel] / m
    d = fine.z[sel] - z0
    c = np.empty(p, dtype=complex)
    # only Re c_0 matters for the exposed Re(v); computed branch-free
    c[0] = (w * np.log(1.0 / np.abs(d))).sum()
    acc = w / d
    for k in range(1, p):
        c[k] = acc.sum() / k
        acc = acc / d
    return c


def _fb_coeffs(kernel: Kernel, fine: FineNodes, z0: complex, p: int,
               sel=slice(None)) -> np.ndarray:
    """Fourier-Bessel coefficients c_m, m = -(p-1)..p-1, via Graf's formula."""
    om = kernel.omega
    m = len(fine.s)
    w = TWO_PI / m
    d = fine.z[sel] - z0
    r = np.abs(d)
    eth = d / r                      # e^{i theta_y}
    tau_sp = fine.values[sel] * fine.speed[sel]
    out = np.zeros(2 * p - 1, dtype=complex)

    def slot(mm: int) -> int:
        return mm + p - 1

    if kernel.layer in ("single", "combined"):
        H = hankel1_orders(p - 1, om * r) if p > 1 else hankel1_orders(0, om * r)
        fac = 0.25j * w
        ph = np.ones_like(d)         # e^{-i m theta} for m = 0 upward
        coef = np.zeros(2 * p - 1, dtype=complex)
        for mm in range(0, p):
            base = fac * (H[mm] * tau_sp)
            coef[slot(mm)] = (ph * base).sum()
            if mm > 0:
                coef[slot(-mm)] = ((-1.0) ** mm) * (np.conj(ph) * base).sum()
            ph = ph * np.conj(eth)
        if kernel.layer == "combined":
            out += -1j * om * coef
        else:
            out += coef
    if kernel.layer in ("double", "combined"):
        H = hankel1_orders(p, om * r)

        def Hm(mm):
            return H[mm] if mm >= 0 else ((-1.0) ** mm) * H[-mm]

        # phases e^{-i k theta} for k = -p..p
        phases = {0: np.ones_like(d)}
        for k in range(1, p + 1):
            phases[k] = phases[k - 1] * np.conj(eth)
            phases[-k] = np.conj(phases[k])
        nu = fine.normal[sel]        # e^{i nu_y}
        fac = 0.125j * om * w
        for mm in range(-(p - 1), p):
            term = (phases[mm - 1] * np.conj(nu) * Hm(mm - 1)
                    - phases[mm + 1] * nu * Hm(mm + 1))
            out[slot(mm)] += fac * (term * tau_sp).sum()
    return out


def form_expansion(kernel: Kernel, density: Density, params: CloseEvalParams,
                   box_index: int, cover: BoxCover | None = None,
                   fine: FineNodes | None = None) -> LocalExpansion:
    """Surrogate expansion for one box from the fine-node trapezoid rule."""
    curve = density.curve
    if cover is None:
        cover = params.make_cover(curve, density.N)
    if fine is None:
        fine = FineNodes.from_density(density, params.fine_count(density.N))
    z0 = cover.centers[box_index]
    h = TWO_PI / density.N
    if np.abs(fine.z - z0).min() < 1e-3 * h * fine.speed.min():
        raise ValueError("expansion center degenerately close to a fine node")
    if kernel.pde == "laplace":
        if kernel.layer == "double":
            c = _taylor_coeffs_dlp(fine, z0, params.p)
        else:
            c = _taylor_coeffs_slp(fine, z0, params.p)
        kind = "laplace_taylor"
    else:
        c = _fb_coeffs(kernel, fine, z0, params.p)
        kind = "helmholtz_fb"
    return LocalExpansion(center=z0, kind=kind, omega=kernel.omega, coeffs=c,
                          radius=float(cover.radii[box_index]),
                          box_index=box_index)


def eval_expansion(exp: LocalExpansion, targets: np.ndarray) -> np.ndarray:
    """Evaluate the truncated series at targets (Horner for Taylor).

    Targets outside the box are warned about but still evaluated, since the
    series may keep converging there.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    d = targets - exp.center
    if exp.radius > 0 and np.abs(d).max() > 1.02 * exp.radius:
        warnings.warn("target outside the expansion's box; evaluating anyway",
                      stacklevel=2)
    if exp.kind == "laplace_taylor":
        out = np.zeros(targets.shape, dtype=complex)
        for c in exp.coeffs[::-1]:
            out = out * d + c
        return out
    p = exp.p
    r = np.abs(d)
    on_center = r == 0
    r_safe = np.where(on_center, 1.0, r)
    eth = np.where(on_center, 1.0, d / r_safe)
    J = bessel_j_orders(p - 1, exp.omega * r.ravel())
    J = J.reshape((p,) + targets.shape)
    out = exp.coeffs[p - 1] * J[0]
    ph = np.ones_like(d)
    for mm in range(1, p):
        ph = ph * eth
        out = out + (exp.coeffs[p - 1 + mm] * ph
                     + exp.coeffs[p - 1 - mm] * ((-1.0) ** mm) * np.conj(ph)) \
            * J[mm]
    return out


def classify_targets(cover: BoxCover, targets: np.ndarray) -> np.ndarray:
    """Box index per target (-1 = not in this cover), via preimage rectangles."""
    s = nearest_preimage(cover.curve, targets)
    return cover.box_of_preimage(s)


def close_evaluate(kernel: Kernel, density: Density, params: CloseEvalParams,
                   targets: np.ndarray, cover: BoxCover | None = None):
    """Dispatch pipeline: surrogate expansions inside the bad collar, native
    evaluation elsewhere. Returns (values, method_tags); Laplace values are
    the physical real part.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    curve = density.curve
    if cover is None:
        cover = params.make_cover(curve, density.N)
    box_idx = classify_targets(cover, targets)
    fine = FineNodes.from_density(density, params.fine_count(density.N))
    vals = np.zeros(targets.shape, dtype=complex)
    tags = np.where(box_idx >= 0, "surrogate", "native")
    far = box_idx < 0
    if far.any():
        vals[far] = native_eval(kernel, density, targets[far])
    for b in np.unique(box_idx[box_idx >= 0]):
        inbox = box_idx == b
        exp = form_expansion(kernel, density, params, int(b), cover=cover,
                             fine=fine)
        vals[inbox] = eval_expansion(exp, targets[inbox])
    if kernel.pde == "laplace":
        return vals.real, tags
    return vals, tags


def convergence_sweep(kernel: Kernel, density: Density,
                      base: CloseEvalParams, targets: np.ndarray,
                      reference: np.ndarray, p_values, beta_values):
    """Max/l2 relative grid error for each (p, beta) combination.

    Returns rows (p, beta, max_rel_err, l2_rel_err) normalized by the sup of
    the reference field.
    """
    targets = np.asarray(targets, dtype=complex)
    reference = np.asarray(reference)
    sup = np.abs(reference).max()
    rows = []
    cover = base.make_cover(density.curve, density.N)
    for p in p_values:
        for beta in beta_values:
            params = CloseEvalParams(p=int(p), beta=float(beta),
                                     n_boxes=base.n_boxes,
                                     alpha_bad=base.alpha_bad,
                                     alpha0=base.alpha0, side=base.side)
            vals, _ = close_evaluate(kernel, density, params, targets,
                                     cover=cover)
            err = np.abs(vals - reference)
            rows.append((int(p), float(beta), float(err.max() / sup),
                         float(np.sqrt(np.mean(err ** 2)) / sup)))
    return np.array(rows)
