import numpy as np
import pytest

from layerclose import (builtin_curve, BVPSpec, solve_bvp, Kernel,
                        make_boundary_data)


@pytest.fixture(scope="session")
def kite():
    return builtin_curve("kite")


@pytest.fixture(scope="session")
def circle():
    return builtin_curve("circle")


@pytest.fixture(scope="session")
def exp_cos_density_130(kite):
    """Converged Laplace interior Dirichlet solve for u = e^y cos x."""
    data = make_boundary_data("exp_cos")
    return solve_bvp(BVPSpec("laplace", 0.0, "interior", "dirichlet",
                             data.data_fn("dirichlet"), kite, 130))


@pytest.fixture(scope="session")
def helm30_scene(kite):
    """Exterior Helmholtz omega=30 CFIE solve with interior point source."""
    omega, src, N = 30.0, 0.3 + 0.2j, 340
    data = make_boundary_data("point_source", omega=omega, source=src)
    dens = solve_bvp(BVPSpec("helmholtz", omega, "exterior", "dirichlet",
                             data.data_fn("dirichlet"), kite, N),
                     method="gmres", tol=1e-12)
    return {"omega": omega, "src": src, "N": N, "density": dens,
            "data": data, "kernel": Kernel("helmholtz", omega, "combined")}


def collar_ray_targets(curve, N, fractions, n_rays=121, side="interior"):
    """Points at the given multiples of the local node spacing along normals."""
    t = np.linspace(0, 2 * np.pi, n_rays + 1)[:-1]
    zb = curve.z(t)
    nb = curve.normal(t)
    sp = np.abs(curve.dz(t))
    h = 2 * np.pi / N
    sgn = -1.0 if side == "interior" else 1.0
    return np.concatenate([zb + sgn * f * h * sp * nb for f in fractions])
