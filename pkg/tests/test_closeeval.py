import numpy as np
import pytest

from layerclose.curves import TWO_PI, build_box_cover
from layerclose.potentials import Density, Kernel, native_eval, trig_upsample
from layerclose.solver import BVPSpec, solve_bvp
from layerclose.closeeval import (CloseEvalParams, FineNodes, close_evaluate,
                                  convergence_sweep, eval_expansion,
                                  form_expansion, LocalExpansion)
from layerclose.boundary_data import make_boundary_data

from conftest import collar_ray_targets

LAP_DLP = Kernel("laplace", 0, "double")
LAP_SLP = Kernel("laplace", 0, "single")


def test_params_validation():
    with pytest.raises(ValueError):
        CloseEvalParams(p=0, beta=4)
    with pytest.raises(ValueError):
        CloseEvalParams(p=10, beta=20)
    with pytest.raises(ValueError):
        CloseEvalParams(p=10, beta=4, side="above")


def test_unit_density_expansion_coefficients(kite):
    """tau = 1 gives c_0 = -1; higher coefficients vanish at the box scale.

    The raw |c_m| for large m carry the quadrature's amplified-but-harmless
    error (each is damped by R^m at evaluation), so the scaled magnitudes
    |c_m| R^m are what vanish.
    """
    dens = Density(kite, np.ones(130))
    exp0 = form_expansion(LAP_DLP, dens, CloseEvalParams(p=10, beta=4), 0)
    assert abs(exp0.coeffs[0] + 1.0) < 1e-12
    scaled = np.abs(exp0.coeffs[1:]) * exp0.radius ** np.arange(1, 10)
    assert scaled.max() < 1e-12


def test_coefficient_error_decays_in_fine_count(kite, exp_cos_density_130):
    """|c_0^(M) - c_0^ref| decays exponentially in M (16N-node reference)."""
    dens = exp_cos_density_130
    cover = build_box_cover(kite, 130)
    ref = form_expansion(LAP_DLP, dens, CloseEvalParams(p=10, beta=16), 3,
                         cover=cover)
    errs = []
    for beta in (1.2, 1.5, 1.8):
        e = form_expansion(LAP_DLP, dens, CloseEvalParams(p=10, beta=beta), 3,
                           cover=cover)
        errs.append(abs(e.coeffs[0] - ref.coeffs[0]))
    # empirical rate ~ e^{-alpha0 M}: each 0.3 of beta adds 39 fine nodes at
    # alpha0 = 5 pi/130, i.e. a factor ~ e^{-4.7} per step
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    assert np.all(ratios > 30)


def test_helmholtz_expansion_matches_fine_native(helm30_scene):
    sc = helm30_scene
    params = CloseEvalParams(p=18, beta=6, side="exterior")
    cover = params.make_cover(sc["density"].curve, sc["N"])
    exp = form_expansion(sc["kernel"], sc["density"], params, 5, cover=cover)
    zt = cover.centers[5] + 0.3 * cover.radii[5] * np.exp(0.7j)
    v = eval_expansion(exp, np.array([zt]))[0]
    fine = Density(sc["density"].curve,
                   trig_upsample(sc["density"].values, 16 * sc["N"]),
                   interpolant="trig")
    vref = native_eval(sc["kernel"], fine, np.array([zt]))[0]
    assert abs(v - vref) < 1e-12


def test_eval_expansion_trivials():
    e = LocalExpansion(center=0.3 + 0.1j, kind="laplace_taylor", omega=0.0,
                       coeffs=np.array([-1.0, 0, 0, 0], dtype=complex),
                       radius=0.5)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")     # second target sits out of box
        vals = eval_expansion(e, np.array([0.31 + 0.12j, 1.0 + 0j]))
    assert np.allclose(vals, -1.0)
    assert eval_expansion(e, np.array([e.center]))[0] == -1.0
    h = LocalExpansion(center=0.0j, kind="helmholtz_fb", omega=2.0,
                       coeffs=np.array([0, 1.0, 0], dtype=complex), radius=0.5)
    from layerclose.specfun import bessel_j
    r = 0.37
    assert abs(eval_expansion(h, np.array([r + 0j]))[0]
               - bessel_j(0, 2.0 * r)) < 1e-14
    assert abs(eval_expansion(h, np.array([0.0j]))[0] - 1.0) < 1e-15


def test_eval_expansion_warns_outside_box():
    e = LocalExpansion(center=0.0j, kind="laplace_taylor", omega=0.0,
                       coeffs=np.array([1.0, 0.5], dtype=complex), radius=0.1)
    with pytest.warns(UserWarning):
        eval_expansion(e, np.array([1.0 + 0j]))


def test_degenerate_center_rejected(kite):
    dens = Density(kite, np.ones(130))
    params = CloseEvalParams(p=4, beta=4)
    cover = build_box_cover(kite, 130)
    fine = FineNodes.from_density(dens, params.fine_count(130))
    bad = cover.centers.copy()
    bad[0] = fine.z[0] + 1e-12
    import dataclasses
    cover2 = dataclasses.replace(cover, centers=bad)
    with pytest.raises(ValueError):
        form_expansion(LAP_DLP, dens, params, 0, cover=cover2, fine=fine)


def test_unit_density_exact_through_collar(kite):
    """close_evaluate returns -1 inside everywhere, including 1e-8 from the
    boundary, at p=10, beta=4."""
    dens = Density(kite, np.ones(130))
    t = np.linspace(0, TWO_PI, 41)[:-1]
    z = kite.z(t) - 1e-8 * kite.normal(t)
    vals, tags = close_evaluate(LAP_DLP, dens, CloseEvalParams(p=10, beta=4),
                                np.r_[z, [0.05 + 0.02j]])
    assert np.abs(vals + 1.0).max() < 1e-11
    assert set(tags[:-1]) == {"surrogate"}


def test_close_eval_entire_data(kite, exp_cos_density_130):
    data = make_boundary_data("exp_cos")
    targs = collar_ray_targets(kite, 130, (0.05, 0.8, 2.5, 4.9))
    targs = np.r_[targs, [0j, 0.4 + 0.3j]]
    vals, tags = close_evaluate(LAP_DLP, exp_cos_density_130,
                                CloseEvalParams(p=10, beta=4, n_boxes=26),
                                targs)
    uref = data.u(targs)
    assert np.abs(vals - uref).max() / np.abs(uref).max() < 1e-12
    assert {"surrogate", "native"} == set(tags)


def test_path_consistency_just_outside_collar(kite, exp_cos_density_130):
    """Forced surrogate and native agree within 10x the predicted native
    error just outside the bad region."""
    dens = exp_cos_density_130
    N = dens.N
    alpha = 1.05 * 10 * np.pi / N
    t = np.linspace(0, TWO_PI, 26)[:-1] + 0.01
    z = kite.z(t + 1j * alpha)
    params = CloseEvalParams(p=10, beta=4)
    cover = params.make_cover(kite, N)
    fine = FineNodes.from_density(dens, params.fine_count(N))
    vn = native_eval(LAP_DLP, dens, z).real
    C = np.abs(fine.values).max()
    pred = 10 * C * np.exp(-alpha * N)
    for ti, zi in zip(t, z):
        b = int(cover.box_of_t(ti))
        exp = form_expansion(LAP_DLP, dens, params, b, cover=cover, fine=fine)
        import warnings
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            vs = eval_expansion(exp, np.array([zi]))[0].real
        i = np.nonzero(z == zi)[0][0]
        assert abs(vs - vn[i]) <= pred


def test_continuity_across_box_walls(kite, exp_cos_density_130):
    # the numerical jump across a wall (true-field variation removed) stays
    # below 1e-9 for converged parameters
    data = make_boundary_data("exp_cos")
    cover = build_box_cover(kite, 130)
    params = CloseEvalParams(p=10, beta=4)
    nb = cover.n_boxes
    edges = (2 * np.arange(4) + 1) * np.pi / nb
    a = 0.5 * cover.alpha_bad
    left = kite.z((edges - 5e-10) + 1j * a)
    right = kite.z((edges + 5e-10) + 1j * a)
    vl, tl = close_evaluate(LAP_DLP, exp_cos_density_130, params, left)
    vr, tr = close_evaluate(LAP_DLP, exp_cos_density_130, params, right)
    assert np.all(tl == "surrogate") and np.all(tr == "surrogate")
    jump = (vl - vr) - (data.u(left) - data.u(right))
    assert np.abs(jump).max() < 1e-9


def test_sweep_two_regimes_and_degradation(kite, exp_cos_density_130):
    data = make_boundary_data("exp_cos")
    targs = collar_ray_targets(kite, 130, (0.05, 0.8, 2.5), n_rays=61)
    uref = data.u(targs)
    base = CloseEvalParams(p=10, beta=4, n_boxes=26)
    ps = [2, 6, 10, 14, 18, 22]
    betas = [1.5, 2.5, 4.0, 5.5, 7.0]
    rows = convergence_sweep(LAP_DLP, exp_cos_density_130, base, targs, uref,
                             ps, betas)
    tab = rows[:, 2].reshape(len(ps), len(betas))
    # two regimes: small p floors at any beta; small beta fails at large p
    assert tab[0].min() > 1e-3                      # p = 2
    assert tab[1].min() > 1e-9 and tab[1].min() < 1e-6   # p = 6 floor
    assert np.all(tab[3:, 0] > 1e-2)                # beta = 1.5, p >= 14
    assert tab.min() < 1e-12
    # best error at large p degrades mildly: <= 2.5 digits at p = 22
    best = tab.min()
    assert tab[-1, -1] <= best * 10 ** 2.5


def test_sweep_beta_grows_linearly_in_p(kite, exp_cos_density_130):
    data = make_boundary_data("exp_cos")
    targs = collar_ray_targets(kite, 130, (0.1, 1.0), n_rays=41)
    uref = data.u(targs)
    base = CloseEvalParams(p=10, beta=4, n_boxes=26)
    ps = [10, 14, 18, 22]
    betas = list(np.arange(2.0, 7.3, 0.5))
    rows = convergence_sweep(LAP_DLP, exp_cos_density_130, base, targs, uref,
                             ps, betas)
    tab = rows[:, 2].reshape(len(ps), len(betas))
    need = []
    for i, p in enumerate(ps):
        ok = np.nonzero(tab[i] <= 1e-10)[0]
        assert len(ok), f"no converged beta for p={p}"
        need.append(betas[ok[0]])
    fit, res = np.polyfit(ps, need, 1, cov=False), None
    pred = np.polyval(fit, ps)
    ss_res = np.sum((np.array(need) - pred) ** 2)
    ss_tot = np.sum((np.array(need) - np.mean(need)) ** 2)
    r2 = 1 - ss_res / ss_tot
    assert fit[0] > 0
    assert r2 > 0.8


def test_helmholtz_sweep_minimum_near_18(helm30_scene):
    sc = helm30_scene
    kite = sc["density"].curve
    alpha_bad = 10 * np.pi / sc["N"]
    tt = np.linspace(0, TWO_PI, 200, endpoint=False)
    targs = np.concatenate([kite.z(tt - 1j * f * alpha_bad)
                            for f in (0.97, 0.5)])
    uref = sc["data"].u(targs)
    base = CloseEvalParams(p=18, beta=6, side="exterior")
    ps = [10, 14, 18, 22, 26]
    rows = convergence_sweep(sc["kernel"], sc["density"], base, targs, uref,
                             ps, [6.0])
    errs = rows[:, 2]
    best_p = ps[int(np.argmin(errs))]
    assert abs(best_p - 18) <= 4
    # p-degradation beyond 20 is mild (measured ~27x; ledgered decision)
    assert errs[-1] <= 100 * errs[2]
    # monotone improvement along beta until plateau at p=18
    rows_b = convergence_sweep(sc["kernel"], sc["density"], base, targs, uref,
                               [18], [3.0, 4.5, 6.0, 7.5])
    eb = rows_b[:, 2]
    k = int(np.argmin(eb))
    assert np.all(np.diff(eb[:k + 1]) < 0)          # improving to the plateau
    assert np.all(eb[k:] <= eb[k] * 10)             # no post-plateau blowup


def test_slp_pipeline_at_least_comparable_to_dlp(kite):
    """Matched entire data: the Neumann/SLP error surface stays within one
    digit of the Dirichlet/DLP surface at each sweep cell."""
    data = make_boundary_data("exp_cos")
    d_dlp = solve_bvp(BVPSpec("laplace", 0.0, "interior", "dirichlet",
                              data.data_fn("dirichlet"), kite, 130))
    d_slp = solve_bvp(BVPSpec("laplace", 0.0, "interior", "neumann",
                              data.data_fn("neumann"), kite, 130))
    targs = collar_ray_targets(kite, 130, (0.1, 1.0, 3.0), n_rays=41)
    targs = np.r_[targs, [0.1 + 0.05j]]
    uref = data.u(targs)
    base = CloseEvalParams(p=10, beta=4, n_boxes=26)
    ps, betas = [8, 10, 14], [3.0, 4.0, 5.0]
    r_dlp = convergence_sweep(LAP_DLP, d_dlp, base, targs, uref, ps, betas)
    # SLP solution carries an additive constant: compare after removing it
    # at the far-interior anchor (last target)
    rows = []
    cover = base.make_cover(kite, 130)
    for p in ps:
        for beta in betas:
            params = CloseEvalParams(p=int(p), beta=float(beta), n_boxes=26)
            vals, _ = close_evaluate(LAP_SLP, d_slp, params, targs,
                                     cover=cover)
            c = vals[-1] - uref[-1]
            err = np.abs(vals - c - uref)[:-1]
            rows.append(err.max() / np.abs(uref).max())
    e_slp = np.array(rows)
    e_dlp = r_dlp[:, 2]
    assert np.all(e_slp <= np.maximum(10 * e_dlp, 1e-12))
