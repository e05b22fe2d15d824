"""Computable forms of the trapezoid-rule error bounds and their consequences:
per-target error predictions from preimage depth, predicted error contours
(imaginary-translate curves with loops trimmed), and the upsampling-ratio rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import Curve, preimages, TWO_PI

RELIABLE_ALPHA_N = 3.0   # predictions with alpha_min*N below this are flagged


def davis_bound(F: float, alpha: float, N: int) -> float:
    """Trapezoid-rule error bound 4*pi*F/(e^{alpha N} - 1) for analytic f."""
    if alpha <= 0 or N < 1:
        raise ValueError("need alpha > 0 and N >= 1")
    return 4.0 * np.pi * F / np.expm1(alpha * N)


def pole_bound(r0: complex, s0: complex, F: float, alpha: float, N: int) -> float:
    """Single-pole refinement: 2*pi*|r0|/(e^{|Im s0| N}-1) plus the edge term."""
    a0 = abs(np.imag(s0))
    if not 0 < a0 < alpha:
        raise ValueError("pole must lie strictly inside the strip")
    return 2.0 * np.pi * abs(r0) / np.expm1(a0 * N) + davis_bound(F, alpha, N)


def branch_bound(jump_integral: float, s0: complex, F: float, alpha: float,
                 N: int) -> float:
    """Branch-cut variant with a user-supplied jump integral over the cut."""
    a0 = abs(np.imag(s0))
    if not 0 < a0 < alpha:
        raise ValueError("branch point must lie strictly inside the strip")
    return jump_integral / np.expm1(a0 * N) + davis_bound(F, alpha, N)


@dataclass(frozen=True)
class BoundInputs:
    """Inputs of the strip bounds: edge sup F, strip half-width, and the
    dominant singularity (pole residue or branch jump integral)."""

    alpha: float
    F: float
    s0: complex | None = None
    r0: complex = 0.0
    branch_jump: float | None = None

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.s0 is not None and not abs(np.imag(self.s0)) < self.alpha:
            raise ValueError("singularity must lie inside the strip")

    def bound(self, N: int) -> float:
        if self.s0 is None:
            return davis_bound(self.F, self.alpha, N)
        if self.branch_jump is not None:
            return branch_bound(self.branch_jump, self.s0, self.F,
                                self.alpha, N)
        return pole_bound(self.r0, self.s0, self.F, self.alpha, N)


@dataclass
class ErrorPrediction:
    """Per-target native-evaluation error prediction C e^{-alpha_min N}."""

    C: float
    N: int
    alpha_min: np.ndarray          # min |Im s| over preimages; inf when none
    bound: np.ndarray
    outside_theory: np.ndarray     # no preimage found within the strip
    reliable: np.ndarray           # alpha_min * N >= RELIABLE_ALPHA_N


def predict_error(curve: Curve, density_bound: float, N: int,
                  targets: np.ndarray,
                  strip_limit: float | None = None) -> ErrorPrediction:
    """Predicted |error| of native evaluation at each target point."""
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    if strip_limit is None:
        strip_limit = curve.strip_limit
    amin = np.full(targets.shape, np.inf)
    for i, z in enumerate(targets.ravel()):
        roots = preimages(curve, z, strip_limit)
        if len(roots):
            amin.reshape(-1)[i] = abs(roots[0].imag)
    outside = ~np.isfinite(amin)
    bound = np.where(outside, np.nan,
                     density_bound * np.exp(-np.minimum(amin, 700 / N) * N))
    return ErrorPrediction(C=density_bound, N=N, alpha_min=amin, bound=bound,
                           outside_theory=outside,
                           reliable=(amin * N >= RELIABLE_ALPHA_N) & ~outside)


def predicted_contour(curve: Curve, epsilon: float, C: float, N: int,
                      n_points: int = 400, side: str = "both",
                      trim_tol: float = 1e-6) -> np.ndarray:
    """Points of the predicted error-level contour for level epsilon.

    The contour is Gamma_alpha with alpha = -log(eps/C)/N, filtered to points
    whose minimal-|Im| preimage equals alpha (loop trimming). Rows are
    (x, y, alpha_signed, epsilon); both signs are produced for side="both".
    """
    if not 0 < epsilon < C:
        raise ValueError("need 0 < epsilon < C")
    alpha = np.log(C / epsilon) / N
    if alpha > curve.strip_limit:
        return np.zeros((0, 4))
    signs = {"both": (1.0, -1.0), "interior": (1.0,), "exterior": (-1.0,)}[side]
    rows = []
    t = TWO_PI * np.arange(n_points) / n_points
    for sgn in signs:
        pts = curve.z(t + 1j * sgn * alpha)
        for z in pts:
            roots = preimages(curve, z, strip_limit=min(
                curve.strip_limit, alpha * 2.5 + 0.1))
            if len(roots) and abs(roots[0].imag) >= alpha - trim_tol:
                rows.append((z.real, z.imag, sgn * alpha, epsilon))
    return np.array(rows) if rows else np.zeros((0, 4))


def required_beta(p: int, delta: float, gamma: float,
                  target_eps: float) -> float:
    """Smallest upsampling ratio beta with
    exp(-2*pi*delta*beta + p*log(2*pi*delta*beta*gamma*e/p)) = target_eps.

    Bracketed bisection on the decreasing branch beta >= p/(2*pi*delta).
    """
    if p < 1 or delta <= 0 or gamma < 1 or not 0 < target_eps < 1:
        raise ValueError("invalid arguments")

    def logval(beta: float) -> float:
        q = TWO_PI * delta * beta
        return -q + p * np.log(q * gamma * np.e / p)

    lo = max(1.0, p / (TWO_PI * delta))
    hi = 100.0
    target = np.log(target_eps)
    if logval(lo) < target:
        # already below the target at the peak of the expression
        return lo
    if logval(hi) > target:
        raise ValueError("no root in bracket [1, 100]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if logval(mid) > target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
