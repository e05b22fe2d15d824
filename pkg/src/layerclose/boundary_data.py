"""Named boundary-data catalog: each entry supplies the exact field, its
gradient, and the Dirichlet/Neumann data functions derived from them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .potentials import fundamental_solution, fundamental_gradient


@dataclass(frozen=True)
class BoundaryData:
    """Exact field with gradient; data functions are derived views.

    valid_side states where u is a PDE solution ("interior", "exterior" or
    "both"); the exact field serves as the reference on that side.
    """

    name: str
    u: Callable[[np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray], tuple]
    valid_side: str = "interior"

    def dirichlet(self, z: np.ndarray, normals=None) -> np.ndarray:
        return self.u(z)

    def neumann(self, z: np.ndarray, normals: np.ndarray) -> np.ndarray:
        gx, gy = self.grad(z)
        return gx * normals.real + gy * normals.imag

    def data_fn(self, bc: str):
        return self.dirichlet if bc == "dirichlet" else self.neumann


def make_boundary_data(name: str, omega: float = 0.0,
                       source: complex = 2.0 + 1.5j,
                       wave_angle: float = 0.0) -> BoundaryData:
    """Catalog lookup.

    xy            u = x y (harmonic, entire)
    exp_cos       u = e^y cos x (harmonic, entire)
    log_source    u = log|z - source| (harmonic away from source)
    point_source  u = Phi_omega(z, source); radiating for omega > 0
    plane_wave    u = -exp(i omega d.x) (scattering data; no exact field)
    """
    if name == "xy":
        return BoundaryData("xy", lambda z: z.real * z.imag,
                            lambda z: (z.imag, z.real), "interior")
    if name == "exp_cos":
        return BoundaryData(
            "exp_cos", lambda z: np.exp(z.imag) * np.cos(z.real),
            lambda z: (-np.exp(z.imag) * np.sin(z.real),
                       np.exp(z.imag) * np.cos(z.real)), "interior")
    if name == "log_source":
        w0 = source

        def grad(z):
            d = z - w0
            r2 = np.abs(d) ** 2
            return d.real / r2, d.imag / r2

        return BoundaryData("log_source", lambda z: np.log(np.abs(z - w0)),
                            grad, "interior")
    if name == "point_source":
        w0 = source
        side = "exterior" if omega > 0 else "interior"
        return BoundaryData(
            "point_source",
            lambda z: fundamental_solution(omega, z, w0),
            lambda z: fundamental_gradient(omega, z, w0), side)
    if name == "unit_density":
        # not a BVP: the given density tau = 1 whose DLP is -1 inside, 0 out
        return BoundaryData("unit_density",
                            lambda z: np.full(np.shape(z), -1.0),
                            lambda z: (np.zeros(np.shape(z)),
                                       np.zeros(np.shape(z))), "interior")
    if name == "plane_wave":
        d = np.exp(1j * wave_angle)

        def u_inc(z):
            return np.exp(1j * omega * (z.real * d.real + z.imag * d.imag))

        def grad(z):
            v = u_inc(z)
            return 1j * omega * d.real * v, 1j * omega * d.imag * v

        return BoundaryData("plane_wave", lambda z: -u_inc(z),
                            lambda z: tuple(-g for g in grad(z)), "none")
    raise ValueError(f"unknown boundary data {name!r}")
