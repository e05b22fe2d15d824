"""Fundamental-solution kernels and native trapezoid-rule layer potentials.

Laplace potentials are computed as the complex field v whose real part is the
physical potential; the imaginary part of the single-layer v is branch
dependent and carries no contract. Helmholtz potentials are complex fields.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .curves import Curve, TWO_PI
from .specfun import j0y0j1y1

_CHUNK = 4096


@dataclass(frozen=True)
class Kernel:
    """PDE + layer selector. combined = double - i*omega*single (Helmholtz)."""

    pde: str                      # laplace | helmholtz
    omega: float = 0.0
    layer: str = "double"         # single | double | combined

    def __post_init__(self):
        if self.pde not in ("laplace", "helmholtz"):
            raise ValueError("pde must be laplace or helmholtz")
        if self.layer not in ("single", "double", "combined"):
            raise ValueError("layer must be single, double or combined")
        if self.pde == "helmholtz" and not self.omega > 0:
            raise ValueError("helmholtz requires omega > 0")
        if self.pde == "laplace" and self.omega != 0:
            raise ValueError("laplace requires omega = 0")
        if self.layer == "combined" and self.pde != "helmholtz":
            raise ValueError("combined layer is Helmholtz-only")


@dataclass
class NystromContext:
    """What the Nystrom interpolant needs: the BIE re-arranged for the density."""

    equation: str                 # dirichlet_interior | neumann_interior
    f: Callable[[np.ndarray], np.ndarray]   # boundary data at parameter values
    sigma_star: complex = 0.0     # value at the fixed node (Neumann only)


@dataclass
class Density:
    """Layer density sampled at the N trapezoid nodes s_j = 2*pi*j/N."""

    curve: Curve
    values: np.ndarray
    interpolant: str = "trig"     # trig | nystrom
    nystrom_context: NystromContext | None = None
    equation: str = ""

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.interpolant not in ("trig", "nystrom"):
            raise ValueError("interpolant must be trig or nystrom")
        if self.interpolant == "nystrom" and self.nystrom_context is None:
            raise ValueError("nystrom interpolant requires a context")

    @property
    def N(self) -> int:
        return len(self.values)

    def nodes(self) -> np.ndarray:
        return self.curve.nodes(self.N)

    def to_json_dict(self) -> dict:
        return {
            "curve": self.curve.name,
            "N": self.N,
            "values": [[float(v.real), float(v.imag)] for v in self.values],
            "interpolant": self.interpolant,
            "equation": self.equation,
        }


# ---------------------------------------------------------------------------
# Trigonometric interpolation (balanced Nyquist mode)
# ---------------------------------------------------------------------------

def trig_coeffs(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Fourier coefficients (k, c_k) of the balanced trig interpolant.

    For even N the Nyquist coefficient is split equally between +-N/2, which
    keeps the interpolant real for real data.
    """
    values = np.asarray(values, dtype=complex)
    n = len(values)
    chat = np.fft.fft(values) / n
    if n % 2 == 0:
        k = np.arange(-n // 2, n // 2 + 1)
        c = np.empty(n + 1, dtype=complex)
        c[1:-1] = chat[np.arange(-n // 2 + 1, n // 2) % n]
        c[0] = 0.5 * chat[n // 2]
        c[-1] = 0.5 * chat[n // 2]
    else:
        k = np.arange(-(n // 2), n // 2 + 1)
        c = chat[k % n]
    return k, c


def trig_eval(values: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Evaluate the trig interpolant of node values at arbitrary parameters."""
    k, c = trig_coeffs(values)
    s = np.asarray(s, dtype=float)
    flat = s.ravel()
    out = np.empty(flat.size, dtype=complex)
    for lo in range(0, flat.size, _CHUNK):
        hi = min(lo + _CHUNK, flat.size)
        out[lo:hi] = np.exp(1j * np.outer(flat[lo:hi], k)) @ c
    return out.reshape(s.shape)


def trig_upsample(values: np.ndarray, m: int) -> np.ndarray:
    """Resample node values onto m uniform nodes by spectral zero padding."""
    values = np.asarray(values, dtype=complex)
    n = len(values)
    if m == n:
        return values.copy()
    if m < n:
        return trig_eval(values, TWO_PI * np.arange(m) / m)
    chat = np.fft.fft(values)
    out = np.zeros(m, dtype=complex)
    h = n // 2
    if n % 2 == 0:
        out[:h] = chat[:h]
        out[h] = 0.5 * chat[h]
        out[m - h] = 0.5 * chat[h]
        out[m - h + 1:] = chat[h + 1:]
    else:
        out[:h + 1] = chat[:h + 1]
        out[m - h:] = chat[h + 1:]
    return np.fft.ifft(out) * (m / n)


# ---------------------------------------------------------------------------
# Parametrized Nystrom kernels (Laplace); shared with the solver
# ---------------------------------------------------------------------------

def laplace_dlp_kernel(curve: Curve, t: np.ndarray, s: np.ndarray) -> np.ndarray:
    """k(t, s) = (1/2pi) Im[Z'(s)/(Z(t)-Z(s))], diagonal by its analytic limit.

    This is the double-layer kernel times |Z'(s)|, i.e. the integrand of
    (D tau)(Z(t)) against plain ds.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    zt = curve.z(t)[:, None]
    zs = curve.z(s)[None, :]
    zps = curve.dz(s)[None, :]
    diff = zt - zs
    near = np.abs(diff) < 1e-13 * curve.scale()
    diff_safe = np.where(near, 1.0, diff)
    out = (zps / diff_safe).imag / TWO_PI
    if near.any():
        it, is_ = np.nonzero(near)
        diag = -(curve.ddz(s[is_]) / (2.0 * curve.dz(s[is_]))).imag / TWO_PI
        out[it, is_] = diag
    return out


def laplace_dstar_kernel(curve: Curve, t: np.ndarray, s: np.ndarray) -> np.ndarray:
    """k*(t, s) = (1/2pi) Im[Z'(t)/(Z(s)-Z(t))] |Z'(s)|/|Z'(t)|, with diagonal."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    s = np.atleast_1d(np.asarray(s, dtype=float))
    zt = curve.z(t)[:, None]
    zpt = curve.dz(t)[:, None]
    zs = curve.z(s)[None, :]
    zps = curve.dz(s)[None, :]
    diff = zs - zt
    near = np.abs(diff) < 1e-13 * curve.scale()
    diff_safe = np.where(near, 1.0, diff)
    out = (zpt / diff_safe).imag / TWO_PI * (np.abs(zps) / np.abs(zpt))
    if near.any():
        it, is_ = np.nonzero(near)
        diag = -(curve.ddz(t[it]) / (2.0 * curve.dz(t[it]))).imag / TWO_PI
        out[it, is_] = diag
    return out


# ---------------------------------------------------------------------------
# Native evaluation
# ---------------------------------------------------------------------------

def _node_data(curve: Curve, n: int):
    s = curve.nodes(n)
    return s, curve.z(s), curve.dz(s)


def native_eval(kernel: Kernel, density: Density,
                targets: np.ndarray) -> np.ndarray:
    """N-point periodic trapezoid evaluation of the layer potential.

    Laplace returns the complex v of the contour-integral form (u = Re v);
    Helmholtz returns the complex field u. Raises if a target coincides with
    a quadrature node.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    curve = density.curve
    _, z, zp = _node_data(curve, density.N)
    dmin_allowed = 1e-14 * curve.scale()
    flat = targets.ravel()
    out = np.empty(flat.size, dtype=complex)
    for lo in range(0, flat.size, _CHUNK):
        hi = min(lo + _CHUNK, flat.size)
        out[lo:hi] = _native_eval_block(kernel, density, flat[lo:hi], z, zp,
                                        dmin_allowed)
    return out.reshape(targets.shape)


def _native_eval_block(kernel, density, tg, z, zp, dmin_allowed):
    diff = z[None, :] - tg[:, None]
    dist = np.abs(diff)
    if dist.min() < dmin_allowed:
        raise ValueError("target coincides with a quadrature node")
    n = density.N
    vals = density.values
    if kernel.pde == "laplace":
        if kernel.layer == "double":
            return (1j / n) * ((vals * zp)[None, :] / diff).sum(axis=1)
        return (np.log(1.0 / diff) * (vals * np.abs(zp))[None, :]).sum(axis=1) / n
    om = kernel.omega
    w = TWO_PI / n
    j0, y0, j1, y1 = j0y0j1y1(om * dist.ravel())
    out = np.zeros(tg.shape, dtype=complex)
    if kernel.layer in ("double", "combined"):
        h1 = (j1 + 1j * y1).reshape(dist.shape)
        normal = -1j * zp / np.abs(zp)
        cosang = ((-diff) * np.conj(normal[None, :])).real / dist
        dlp_k = (0.25j * om) * h1 * cosang
        out += w * (dlp_k * (vals * np.abs(zp))[None, :]).sum(axis=1)
    if kernel.layer in ("single", "combined"):
        h0 = (j0 + 1j * y0).reshape(dist.shape)
        slp = w * (0.25j * h0 * (vals * np.abs(zp))[None, :]).sum(axis=1)
        out += slp if kernel.layer == "single" else -1j * om * slp
    return out


def winding_number(curve: Curve, targets: np.ndarray, n: int = 256) -> np.ndarray:
    """Rounded discrete winding number; reliable away from the boundary."""
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    _, z, zp = _node_data(curve, n)
    flat = targets.ravel()
    out = np.empty(flat.size, dtype=float)
    for lo in range(0, flat.size, _CHUNK):
        hi = min(lo + _CHUNK, flat.size)
        w = (zp[None, :] / (z[None, :] - flat[lo:hi, None])).sum(axis=1) / (1j * n)
        out[lo:hi] = w.real
    return np.rint(out).astype(int).reshape(targets.shape)


# ---------------------------------------------------------------------------
# Point-source fields and the Green representation check
# ---------------------------------------------------------------------------

def fundamental_solution(omega: float, x: np.ndarray, y: complex) -> np.ndarray:
    """Phi(x, y) for the Laplace (omega = 0) or Helmholtz kernel."""
    x = np.asarray(x, dtype=complex)
    r = np.abs(x - y)
    if omega == 0:
        return np.log(1.0 / r) / TWO_PI
    j0, y0, _, _ = j0y0j1y1(omega * np.atleast_1d(r).ravel())
    return (0.25j * (j0 + 1j * y0)).reshape(np.shape(r))


def fundamental_gradient(omega: float, x: np.ndarray, y: complex):
    """grad_x Phi(x, y) as a component pair (gx, gy); complex for omega > 0."""
    x = np.asarray(x, dtype=complex)
    d = x - y
    r = np.abs(d)
    if omega == 0:
        gx = -d.real / (TWO_PI * r ** 2)
        gy = -d.imag / (TWO_PI * r ** 2)
        return gx, gy
    _, _, j1, y1 = j0y0j1y1(omega * np.atleast_1d(r).ravel())
    h1 = (j1 + 1j * y1).reshape(np.shape(r))
    fac = (-0.25j * omega) * h1 / r
    return fac * d.real, fac * d.imag


def grf_residual(omega: float, curve: Curve, u_source: complex, N: int,
                 targets: np.ndarray) -> np.ndarray:
    """Residual of the Green representation formula under native evaluation.

    Boundary data comes from the point-source field Phi(., u_source) with the
    source strictly outside the (interior) domain; returns
    S[du/dn](x) - D[u](x) - u(x) inside and the same minus 0 outside.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    if winding_number(curve, np.array([u_source]))[0] != 0:
        raise ValueError("source point must lie outside the domain")
    s, z, zp = _node_data(curve, N)
    normal = -1j * zp / np.abs(zp)
    u_bdry = fundamental_solution(omega, z, u_source)
    gx, gy = fundamental_gradient(omega, z, u_source)
    dudn = gx * normal.real + gy * normal.imag
    kern = "laplace" if omega == 0 else "helmholtz"
    slp = Density(curve, dudn)
    dlp = Density(curve, u_bdry)
    val = (native_eval(Kernel(kern, omega, "single"), slp, targets)
           - native_eval(Kernel(kern, omega, "double"), dlp, targets))
    if omega == 0:
        val = val.real.astype(complex)
    inside = winding_number(curve, targets) == 1
    u_t = fundamental_solution(omega, targets, u_source)
    if omega == 0:
        u_t = u_t.real.astype(complex)
    return val - np.where(inside, u_t, 0.0)


# ---------------------------------------------------------------------------
# Density interpolation to off-node parameters
# ---------------------------------------------------------------------------

def interpolate_density(density: Density, fine_s: np.ndarray) -> np.ndarray:
    """Density values at arbitrary parameters via the configured interpolant.

    trig: balanced degree-N/2 trigonometric interpolant. nystrom: the
    second-kind equation solved for the density at the off-node point, e.g.
    tau(t) = 2[(D_N tau)(t) - f(t)] for the interior Dirichlet equation.
    """
    fine_s = np.asarray(fine_s, dtype=float)
    if density.interpolant == "trig":
        return trig_eval(density.values, fine_s)
    ctx = density.nystrom_context
    if ctx is None:
        raise ValueError("nystrom interpolant requires a context")
    curve = density.curve
    n = density.N
    s = curve.nodes(n)
    w = TWO_PI / n
    if ctx.equation == "dirichlet_interior":
        quad = laplace_dlp_kernel(curve, fine_s, s) @ density.values * w
        return 2.0 * (quad - ctx.f(fine_s))
    if ctx.equation == "neumann_interior":
        quad = laplace_dstar_kernel(curve, fine_s, s) @ density.values * w
        return 2.0 * (ctx.f(fine_s) - quad - ctx.sigma_star)
    raise ValueError(f"unsupported equation for interpolation: {ctx.equation}")
