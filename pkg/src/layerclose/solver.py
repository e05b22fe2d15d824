"""Nystrom discretization and solution of the supported boundary-value problems.

Supported formulations: Laplace interior Dirichlet (D - I/2), Laplace interior
Neumann (D* + K + I/2 with a rank-one pin at the s = 0 node), and the exterior
Helmholtz Dirichlet combined-field equation (D - i*omega*S + I/2). Helmholtz
kernels are split into log-singular and smooth parts and integrated with the
Kress product quadrature on the global trapezoid grid.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .curves import Curve, TWO_PI
from .potentials import (Density, NystromContext, laplace_dlp_kernel,
                         laplace_dstar_kernel)
from .specfun import EULER_GAMMA, j0y0j1y1

_SUPPORTED = {
    ("laplace", "interior", "dirichlet"),
    ("laplace", "interior", "neumann"),
    ("helmholtz", "exterior", "dirichlet"),
}


class SolverError(RuntimeError):
    """Linear solve failed (singular system or GMRES stagnation)."""


@dataclass
class BVPSpec:
    """One boundary-value problem: PDE, side, condition, data and grid size.

    data is called as data(points, normals) and must return the boundary
    values (Dirichlet) or normal derivatives (Neumann) at those points.
    """

    pde: str
    omega: float
    side: str
    bc: str
    data: Callable[[np.ndarray, np.ndarray], np.ndarray]
    curve: Curve
    N: int

    def __post_init__(self):
        if (self.pde, self.side, self.bc) not in _SUPPORTED:
            raise ValueError(
                f"unsupported combination {(self.pde, self.side, self.bc)}")

    @property
    def equation(self) -> str:
        if self.pde == "helmholtz":
            return "helmholtz_cfie"
        return f"{self.bc}_{self.side}"


@dataclass
class NystromSystem:
    matrix: np.ndarray
    rhs: np.ndarray
    nodes: np.ndarray
    equation: str
    spec: BVPSpec


def kress_log_weights(N: int) -> np.ndarray:
    """Quadrature matrix R for int_0^{2pi} log(4 sin^2((s_i - s)/2)) g(s) ds.

    Row i applied to samples g(s_j) on the N-point trapezoid grid integrates
    the log-singular product spectrally accurately (exact for trig polynomials
    of degree < N/2). N must be even.
    """
    if N % 2 != 0:
        raise ValueError("Kress rule requires even N")
    n = N // 2
    d = np.arange(N)
    td = np.pi * d / n
    m = np.arange(1, n)
    w = -(TWO_PI / n) * (np.cos(np.outer(td, m)) / m).sum(axis=1) \
        - (np.pi / n ** 2) * np.cos(n * td)
    idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
    return w[idx]


def _log_4sin2(s: np.ndarray, t: np.ndarray) -> np.ndarray:
    """log(4 sin^2((s - t)/2)) with the diagonal left at 0 (callers mask it)."""
    d = s[:, None] - t[None, :]
    val = 4.0 * np.sin(d / 2.0) ** 2
    return np.log(np.where(val == 0.0, 1.0, val))


def _helmholtz_blocks(curve: Curve, N: int, omega: float):
    """Kress-split Nystrom matrices (S, D) for the Helmholtz layer operators."""
    s = curve.nodes(N)
    z = curve.z(s)
    zp = curve.dz(s)
    sp = np.abs(zp)
    normal = -1j * zp / sp
    diff = z[:, None] - z[None, :]
    r = np.abs(diff)
    off = ~np.eye(N, dtype=bool)
    x = np.where(off, omega * r, 1.0)
    j0, y0, j1, y1 = j0y0j1y1(x.ravel())
    j0 = j0.reshape(r.shape); y0 = y0.reshape(r.shape)
    j1 = j1.reshape(r.shape); y1 = y1.reshape(r.shape)
    h0 = j0 + 1j * y0
    h1 = j1 + 1j * y1
    logk = _log_4sin2(s, s)
    R = kress_log_weights(N)
    wtr = TWO_PI / N

    # single layer: M = (i/4) H0(w r) |Z'|, split M = M1 log(4sin^2) + M2
    M1 = -(1.0 / (4.0 * np.pi)) * j0 * sp[None, :]
    np.fill_diagonal(M1, -sp / (4.0 * np.pi))
    M = 0.25j * h0 * sp[None, :]
    M2 = np.where(off, M - M1 * logk, 0.0 + 0.0j)
    np.fill_diagonal(M2, (0.25j - EULER_GAMMA / TWO_PI
                          - np.log(omega * sp / 2.0) / TWO_PI) * sp)
    S = R * M1 + wtr * M2

    # double layer: L = (i w/4) H1(w r) <(x-y)/r, n(y)> |Z'|
    cosang = np.where(off, (diff * np.conj(normal[None, :])).real
                      / np.where(off, r, 1.0), 0.0)
    L1 = -(omega / (4.0 * np.pi)) * j1 * cosang * sp[None, :]
    np.fill_diagonal(L1, 0.0)
    L = (0.25j * omega) * h1 * cosang * sp[None, :]
    L2 = np.where(off, L - L1 * logk, 0.0 + 0.0j)
    lap_diag = -(curve.ddz(s) / (2.0 * curve.dz(s))).imag / TWO_PI
    np.fill_diagonal(L2, lap_diag)
    D = R * L1 + wtr * L2
    return S, D


def assemble(spec: BVPSpec) -> NystromSystem:
    """Dense Nystrom system for the given BVP."""
    curve, N = spec.curve, spec.N
    if N < 16:
        raise ValueError("N must be at least 16")
    if spec.pde == "helmholtz" and N % 2 != 0:
        raise ValueError("Helmholtz assembly requires even N (Kress rule)")
    s = curve.nodes(N)
    z = curve.z(s)
    zp = curve.dz(s)
    normal = -1j * zp / np.abs(zp)
    rhs = np.asarray(spec.data(z, normal), dtype=complex)
    w = TWO_PI / N
    if spec.pde == "laplace" and spec.bc == "dirichlet":
        A = w * laplace_dlp_kernel(curve, s, s).astype(complex)
        A[np.diag_indices(N)] -= 0.5
    elif spec.pde == "laplace" and spec.bc == "neumann":
        A = w * laplace_dstar_kernel(curve, s, s).astype(complex)
        A[:, 0] += 1.0              # rank-one pin at the fixed node s = 0
        A[np.diag_indices(N)] += 0.5
    else:
        S, D = _helmholtz_blocks(curve, N, spec.omega)
        A = D - 1j * spec.omega * S
        A[np.diag_indices(N)] += 0.5
    return NystromSystem(matrix=A, rhs=rhs, nodes=s,
                         equation=spec.equation, spec=spec)


def gmres(A: np.ndarray, b: np.ndarray, tol: float, max_iter: int = 500,
          stall_window: int = 50):
    """Plain (no restart) GMRES with modified Gram-Schmidt and Givens rotations.

    Returns (x, iterations, relative_residual). Raises SolverError on
    stagnation: no residual decrease over stall_window iterations.
    """
    n = len(b)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0, 0.0
    max_iter = min(max_iter, n)
    Q = np.zeros((n, max_iter + 1), dtype=complex)
    H = np.zeros((max_iter + 1, max_iter), dtype=complex)
    cs = np.zeros(max_iter, dtype=complex)
    sn = np.zeros(max_iter, dtype=complex)
    g = np.zeros(max_iter + 1, dtype=complex)
    Q[:, 0] = b / bnorm
    g[0] = bnorm
    best = np.inf
    best_at = 0
    k_done = 0
    for k in range(max_iter):
        v = A @ Q[:, k]
        for i in range(k + 1):
            H[i, k] = np.vdot(Q[:, i], v)
            v -= H[i, k] * Q[:, i]
        H[k + 1, k] = np.linalg.norm(v)
        if H[k + 1, k].real > 1e-300:
            Q[:, k + 1] = v / H[k + 1, k]
        for i in range(k):
            t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
            H[i + 1, k] = -np.conj(sn[i]) * H[i, k] + cs[i] * H[i + 1, k]
            H[i, k] = t
        denom = np.sqrt(np.abs(H[k, k]) ** 2 + np.abs(H[k + 1, k]) ** 2)
        if denom == 0:
            cs[k], sn[k] = 1.0, 0.0
        else:
            cs[k] = np.abs(H[k, k]) / denom
            ph = H[k, k] / np.abs(H[k, k]) if H[k, k] != 0 else 1.0
            sn[k] = ph * np.conj(H[k + 1, k]) / denom
        H[k, k] = cs[k] * H[k, k] + sn[k] * H[k + 1, k]
        H[k + 1, k] = 0.0
        g[k + 1] = -np.conj(sn[k]) * g[k]
        g[k] = cs[k] * g[k]
        res = np.abs(g[k + 1]) / bnorm
        k_done = k + 1
        if res < best * (1.0 - 1e-4):
            best, best_at = res, k
        if res <= tol:
            break
        if k - best_at >= stall_window:
            raise SolverError(
                f"GMRES stagnated: no residual decrease over {stall_window} "
                f"iterations (best {best:.3e})")
    final = float(np.abs(g[k_done]) / bnorm)
    if final > tol:
        raise SolverError(
            f"GMRES did not reach tol={tol:.1e} in {k_done} iterations "
            f"(residual {final:.3e})")
    y = np.linalg.solve(H[:k_done, :k_done], g[:k_done])
    x = Q[:, :k_done] @ y
    return x, k_done, final


def solve(system: NystromSystem, method: str = "dense_lu",
          tol: float = 1e-12) -> Density:
    """Solve the Nystrom system and package the density with its interpolant.

    Laplace densities carry a Nystrom interpolation context (trapezoid-rule
    accuracy beats the trig interpolant's Nyquist cutoff by a factor two);
    Helmholtz densities interpolate trigonometrically.
    """
    info = {}
    if method == "dense_lu":
        try:
            vals = np.linalg.solve(system.matrix, system.rhs)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"singular Nystrom matrix: {exc}") from exc
        info = {"method": "dense_lu", "iterations": 0}
    elif method == "gmres":
        if tol < 1e-14:
            raise ValueError("gmres tol must be >= 1e-14")
        vals, iters, resid = gmres(system.matrix, system.rhs, tol)
        info = {"method": "gmres", "iterations": iters, "residual": resid}
    else:
        raise ValueError("method must be dense_lu or gmres")
    spec = system.spec
    if spec.pde == "laplace":
        fpar = _parametrized_data(spec)
        if spec.bc == "dirichlet":
            ctx = NystromContext(equation="dirichlet_interior", f=fpar)
        else:
            ctx = NystromContext(equation="neumann_interior", f=fpar,
                                 sigma_star=complex(vals[0]))
        dens = Density(spec.curve, vals, interpolant="nystrom",
                       nystrom_context=ctx, equation=system.equation)
    else:
        dens = Density(spec.curve, vals, interpolant="trig",
                       equation=system.equation)
    dens.solve_info = info
    return dens


def _parametrized_data(spec: BVPSpec):
    curve, data = spec.curve, spec.data

    def fpar(t: np.ndarray) -> np.ndarray:
        z = curve.z(np.asarray(t, dtype=float))
        zp = curve.dz(np.asarray(t, dtype=float))
        return np.asarray(data(z, -1j * zp / np.abs(zp)), dtype=complex)

    return fpar


def solve_bvp(spec: BVPSpec, method: str = "dense_lu",
              tol: float = 1e-12) -> Density:
    """Convenience: assemble then solve."""
    return solve(assemble(spec), method=method, tol=tol)
