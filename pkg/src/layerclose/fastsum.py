"""O(N) evaluation path: near/far split around box centers with pluggable
far-field summation backends (direct, and a quadtree multipole/local tree for
the Laplace-type kernels).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .curves import BoxCover, TWO_PI
from .potentials import Kernel, Density
from .specfun import j0y0j1y1
from .closeeval import (CloseEvalParams, FineNodes, LocalExpansion,
                        eval_expansion, classify_targets,
                        _taylor_coeffs_dlp, _taylor_coeffs_slp, _fb_coeffs)

_CHUNK = 2048


@dataclass(frozen=True)
class SumKernel:
    """Pointwise source-to-target kernel for plain weighted sums.

    cauchy          sum_j w_j / (y_j - z)                     (complex)
    log             sum_j w_j log|y_j - z|                    (w may be complex)
    helmholtz_slp   sum_j w_j (i/4) H0(w0 |y_j - z|)
    helmholtz_dlp   sum_j w_j (i w0/4) H1(w0 r) <(z-y_j)/r, n_j>
    helmholtz_combined   dlp - i*w0*slp with shared weights
    """

    kind: str
    omega: float = 0.0
    normals: np.ndarray | None = None


class BackendCapabilityError(ValueError):
    """Backend does not support the requested kernel."""


@dataclass(frozen=True)
class SummationBackend:
    """Capability descriptor: which kernel kinds a backend sums, and the
    accuracy (relative to sum|w|) it guarantees against direct summation."""

    name: str
    kinds: tuple
    accuracy: float

    def supports(self, kind: str) -> bool:
        return kind in self.kinds


DIRECT_BACKEND = SummationBackend(
    "direct",
    ("cauchy", "log", "helmholtz_slp", "helmholtz_dlp", "helmholtz_combined"),
    1e-14)
TREE_BACKEND = SummationBackend("tree", ("cauchy", "log"), 1e-10)
BACKENDS = {b.name: b for b in (DIRECT_BACKEND, TREE_BACKEND)}


def direct_backend(sources: np.ndarray, weights: np.ndarray, kern: SumKernel,
                   targets: np.ndarray) -> np.ndarray:
    """Exact O(sources x targets) kernel sums; the reference backend."""
    sources = np.asarray(sources, dtype=complex)
    weights = np.asarray(weights, dtype=complex)
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    out = np.zeros(targets.shape, dtype=complex)
    flat = targets.ravel()
    res = out.reshape(-1)
    for lo in range(0, flat.size, _CHUNK):
        hi = min(lo + _CHUNK, flat.size)
        res[lo:hi] = _direct_block(sources, weights, kern, flat[lo:hi])
    return out


def _direct_block(src, w, kern: SumKernel, tg):
    d = src[None, :] - tg[:, None]
    if kern.kind == "cauchy":
        return (w[None, :] / d).sum(axis=1)
    if kern.kind == "log":
        return (w[None, :] * np.log(np.abs(d))).sum(axis=1)
    r = np.abs(d)
    om = kern.omega
    j0, y0, j1, y1 = j0y0j1y1(om * r.ravel())
    out = np.zeros(tg.shape, dtype=complex)
    if kern.kind in ("helmholtz_dlp", "helmholtz_combined"):
        if kern.normals is None:
            raise ValueError("helmholtz dlp sums need source normals")
        h1 = (j1 + 1j * y1).reshape(r.shape)
        cosang = ((-d) * np.conj(kern.normals[None, :])).real / r
        out += (0.25j * om) * ((h1 * cosang) * w[None, :]).sum(axis=1)
    if kern.kind in ("helmholtz_slp", "helmholtz_combined"):
        h0 = (j0 + 1j * y0).reshape(r.shape)
        slp = 0.25j * (h0 * w[None, :]).sum(axis=1)
        out += slp if kern.kind == "helmholtz_slp" else -1j * om * slp
    return out


# ---------------------------------------------------------------------------
# Quadtree multipole/local summation for the Laplace-type kernels
# ---------------------------------------------------------------------------

LEAF_CAP = 40


def _series_order(eps: float) -> int:
    return int(np.ceil(np.log2(1.0 / eps))) + 2


def _pack(ix, iy):
    return (np.int64(ix) << 32) | np.int64(iy)


class _Tree:
    """Uniform quadtree over occupied cells; multipole upward pass, M2L
    interactions between non-adjacent same-level cells with adjacent parents,
    local downward pass, direct sums between adjacent leaves."""

    def __init__(self, src: np.ndarray, tg: np.ndarray, order: int):
        pts = np.concatenate([src, tg])
        self.lo = complex(pts.real.min(), pts.imag.min())
        self.size = max(pts.real.max() - pts.real.min(),
                        pts.imag.max() - pts.imag.min()) * (1 + 1e-12) + 1e-300
        self.src, self.tg, self.P = src, tg, order
        levels = 2
        while levels < 13:
            _, inv = self._cells(src, levels)
            if np.bincount(inv).max() <= LEAF_CAP:
                break
            levels += 1
        self.L = levels
        P = order
        B = np.array([[comb(a, b) if b <= a else 0 for b in range(P + 1)]
                      for a in range(2 * P + 2)], dtype=float)
        ll = np.arange(P + 1)
        kk = np.arange(1, P + 1)
        # M2L: T[l, k-1] = (-1)^k C(l+k-1, k-1) / tau^{l+k}
        self._m2l_B = ((-1.0) ** kk)[None, :] * B[ll[:, None] + kk[None, :] - 1,
                                                  kk[None, :] - 1]
        self._m2l_pow = ll[:, None] + kk[None, :]
        # M2M: S[l, k-1] = C(l-1, k-1) t^{l-k} for k <= l
        lv = np.arange(1, P + 1)
        self._m2m_B = np.where(kk[None, :] <= lv[:, None],
                               B[np.maximum(lv[:, None] - 1, 0),
                                 np.minimum(kk[None, :] - 1, P)], 0.0)
        self._m2m_pow = np.maximum(lv[:, None] - kk[None, :], 0)
        # L2L: C[j, l] = C(l, j) delta^{l-j} for l >= j
        self._l2l_B = np.where(ll[None, :] >= ll[:, None],
                               B[np.minimum(ll[None, :], 2 * P + 1),
                                 ll[:, None]], 0.0)
        self._l2l_pow = np.maximum(ll[None, :] - ll[:, None], 0)

    def _grid(self, level: int) -> float:
        return self.size / (1 << level)

    def _cells(self, pts: np.ndarray, level: int):
        h = self._grid(level)
        n = (1 << level) - 1
        ix = np.minimum(((pts.real - self.lo.real) / h).astype(np.int64), n)
        iy = np.minimum(((pts.imag - self.lo.imag) / h).astype(np.int64), n)
        return np.unique(_pack(ix, iy), return_inverse=True)

    def _center(self, keys, level):
        h = self._grid(level)
        ix = keys >> 32
        iy = keys & 0xFFFFFFFF
        return (self.lo.real + (ix + 0.5) * h) \
            + 1j * (self.lo.imag + (iy + 0.5) * h)

    # -- translations (small dense matrix applications) --

    def _powers(self, t: complex, n: int) -> np.ndarray:
        out = np.empty(n, dtype=complex)
        out[0] = 1.0
        for i in range(1, n):
            out[i] = out[i - 1] * t
        return out

    def _m2m(self, a: np.ndarray, t: complex) -> np.ndarray:
        P = self.P
        tp = self._powers(t, P + 1)
        out = np.empty_like(a)
        out[0] = a[0]
        out[1:] = (self._m2m_B * tp[self._m2m_pow]) @ a[1:]
        if a[0] != 0:
            out[1:] -= a[0] * tp[1:] / np.arange(1, P + 1)
        return out

    def _m2l(self, a: np.ndarray, tau: complex, with_log: bool) -> np.ndarray:
        P = self.P
        ip = self._powers(1.0 / tau, 2 * P + 2)
        out = (self._m2l_B * ip[self._m2l_pow]) @ a[1:]
        if with_log and a[0] != 0:
            # branch-free log: only the real part of log sums is contractual
            out[0] += a[0] * np.log(np.abs(tau))
            out[1:] -= a[0] * ip[1:P + 1] / np.arange(1, P + 1)
        return out

    def _l2l(self, c: np.ndarray, delta: complex) -> np.ndarray:
        dp = self._powers(delta, 2 * self.P + 2)
        return (self._l2l_B * dp[self._l2l_pow]) @ c

    # -- main pass --

    def run(self, weights: np.ndarray, with_log: bool) -> np.ndarray:
        P = self.P
        src, tg = self.src, self.tg
        skeys, sinv = self._cells(src, self.L)
        tkeys, tinv = self._cells(tg, self.L)
        sorder = np.argsort(sinv, kind="stable")
        sstart = np.searchsorted(sinv[sorder], np.arange(len(skeys) + 1))
        torder = np.argsort(tinv, kind="stable")
        tstart = np.searchsorted(tinv[torder], np.arange(len(tkeys) + 1))

        # P2M, vectorized over all leaves with segmented reductions
        cen = self._center(skeys, self.L)
        ssorted = src[sorder]
        wsorted = weights[sorder]
        d = ssorted - cen[sinv[sorder]]
        leafm = np.zeros((len(skeys), P + 1), dtype=complex)
        seg = sstart[:-1]
        acc = wsorted.copy()
        if with_log:
            leafm[:, 0] = np.add.reduceat(acc, seg)
            for k in range(1, P + 1):
                acc = acc * d
                leafm[:, k] = -np.add.reduceat(acc, seg) / k
        else:
            for k in range(1, P + 1):
                leafm[:, k] = np.add.reduceat(acc, seg)
                acc = acc * d

        mp = {self.L: dict(zip(skeys.tolist(), leafm))}
        for lev in range(self.L - 1, 1, -1):
            up: dict = {}
            for key, a in mp[lev + 1].items():
                pk = int(_pack((key >> 32) >> 1, (key & 0xFFFFFFFF) >> 1))
                t = (self._center(np.int64(key), lev + 1)
                     - self._center(np.int64(pk), lev))
                shifted = self._m2m(a, t)
                if pk in up:
                    up[pk] += shifted
                else:
                    up[pk] = shifted
            mp[lev] = up

        # target cell sets per level
        tcells = {self.L: set(int(k) for k in tkeys)}
        for lev in range(self.L - 1, 1, -1):
            tcells[lev] = {int(_pack((k >> 32) >> 1, (k & 0xFFFFFFFF) >> 1))
                           for k in tcells[lev + 1]}

        loc: dict = {lev: {} for lev in range(2, self.L + 1)}
        for lev in range(2, self.L + 1):
            srcs = mp.get(lev, {})
            if srcs:
                for key in tcells[lev]:
                    ix, iy = key >> 32, key & 0xFFFFFFFF
                    c_t = self._center(np.int64(key), lev)
                    acc2 = loc[lev].get(key)
                    px, py = ix >> 1, iy >> 1
                    for dx in (-1, 0, 1):
                        for dy in (-1, 0, 1):
                            npx, npy = px + dx, py + dy
                            if not (0 <= npx < (1 << (lev - 1))
                                    and 0 <= npy < (1 << (lev - 1))):
                                continue
                            for cx in (0, 1):
                                for cy in (0, 1):
                                    jx = (npx << 1) | cx
                                    jy = (npy << 1) | cy
                                    if max(abs(jx - ix), abs(jy - iy)) <= 1:
                                        continue
                                    a = srcs.get(int(_pack(jx, jy)))
                                    if a is None:
                                        continue
                                    c_s = self._center(_pack(jx, jy), lev)
                                    contrib = self._m2l(a, c_s - c_t, with_log)
                                    acc2 = contrib if acc2 is None \
                                        else acc2 + contrib
                    if acc2 is not None:
                        loc[lev][key] = acc2
            if lev < self.L:
                for key, c in loc[lev].items():
                    for cx in (0, 1):
                        for cy in (0, 1):
                            ck = int(_pack(((key >> 32) << 1) | cx,
                                           ((key & 0xFFFFFFFF) << 1) | cy))
                            if ck not in tcells[lev + 1]:
                                continue
                            delta = (self._center(np.int64(ck), lev + 1)
                                     - self._center(np.int64(key), lev))
                            shifted = self._l2l(c, delta)
                            prev = loc[lev + 1].get(ck)
                            loc[lev + 1][ck] = shifted if prev is None \
                                else prev + shifted

        # L2P (Horner across all targets) + P2P over adjacent leaves
        out = np.zeros(len(tg), dtype=complex)
        locmat = np.zeros((len(tkeys), P + 1), dtype=complex)
        has_loc = np.zeros(len(tkeys), dtype=bool)
        for c, key in enumerate(tkeys.tolist()):
            v = loc[self.L].get(int(key))
            if v is not None:
                locmat[c] = v
                has_loc[c] = True
        dtg = tg - self._center(tkeys, self.L)[tinv]
        acc3 = np.zeros(len(tg), dtype=complex)
        for l in range(P, -1, -1):
            acc3 = acc3 * dtg + locmat[tinv, l]
        out += np.where(has_loc[tinv], acc3, 0.0)

        smap = {int(k): i for i, k in enumerate(skeys)}
        for c, key in enumerate(tkeys.tolist()):
            ids = torder[tstart[c]:tstart[c + 1]]
            z = tg[ids]
            ix, iy = key >> 32, key & 0xFFFFFFFF
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    jx, jy = ix + dx, iy + dy
                    if jx < 0 or jy < 0:
                        continue
                    sc = smap.get(int(_pack(jx, jy)))
                    if sc is None:
                        continue
                    sids = sorder[sstart[sc]:sstart[sc + 1]]
                    dd = z[:, None] - src[sids][None, :]
                    if with_log:
                        out[ids] += (weights[sids][None, :]
                                     * np.log(np.abs(dd))).sum(axis=1)
                    else:
                        out[ids] += (weights[sids][None, :] / dd).sum(axis=1)
        return out


def tree_backend_laplace(sources: np.ndarray, weights: np.ndarray,
                         targets: np.ndarray, accuracy_eps: float,
                         kind: str = "cauchy") -> np.ndarray:
    """Hierarchical summation of 1/(y-z) or log|y-z| kernels.

    Matches direct_backend within accuracy_eps * sum|w| in max norm.
    """
    if accuracy_eps < 1e-14:
        raise ValueError("accuracy_eps below 1e-14 is unsupported")
    if kind not in ("cauchy", "log"):
        raise BackendCapabilityError("tree backend supports cauchy and log only")
    sources = np.asarray(sources, dtype=complex)
    weights = np.asarray(weights, dtype=complex)
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    tree = _Tree(sources, targets.ravel(), _series_order(accuracy_eps))
    if kind == "cauchy":
        # tree computes sum w/(z - y); requested sum w/(y - z)
        return (-tree.run(weights, with_log=False)).reshape(targets.shape)
    # log|y-z| is symmetric in y, z; complex weights via two real passes
    if np.abs(weights.imag).max() > 0:
        re = tree.run(weights.real + 0j, with_log=True).real
        im = tree.run(weights.imag + 0j, with_log=True).real
        return (re + 1j * im).reshape(targets.shape)
    return tree.run(weights, with_log=True).real.astype(complex) \
        .reshape(targets.shape)


# ---------------------------------------------------------------------------
# Near/far split evaluation
# ---------------------------------------------------------------------------

@dataclass
class NearSet:
    """Contiguous band of fine nodes within cutoff G of a box center."""

    box_index: int
    cutoff: float
    j_near: np.ndarray             # indices into the fine grid, mod M


def choose_cutoff(cover: BoxCover, box_index: int, n_side: int = 3,
                  factor: float = 1.5) -> float:
    """Cutoff G = factor x max local bad-collar width over the box and its
    n_side neighbors on each side."""
    nb = cover.n_boxes
    widths = [cover.width_of_box((box_index + d) % nb)
              for d in range(-n_side, n_side + 1)]
    return factor * max(widths)


def near_set(cover: BoxCover, box_index: int, fine_z: np.ndarray,
             cutoff: float) -> NearSet:
    """Maximal contiguous fine-node band around the nearest node within G."""
    z0 = cover.centers[box_index]
    m = len(fine_z)
    dist = np.abs(fine_z - z0)
    j0 = int(np.argmin(dist))
    lo = j0
    while lo > j0 - m and dist[(lo - 1) % m] <= cutoff:
        lo -= 1
    hi = j0
    while hi < j0 + m and dist[(hi + 1) % m] <= cutoff:
        hi += 1
    idx = np.arange(lo, hi + 1) % m
    return NearSet(box_index=box_index, cutoff=cutoff, j_near=idx)


def _split_weights(kernel: Kernel, fine: FineNodes, sel=slice(None)):
    """(SumKernel, weights) pairs for the far-field sums of a layer kernel."""
    m = len(fine.s)
    if kernel.pde == "laplace":
        if kernel.layer == "double":
            return [(SumKernel("cauchy"),
                     (1j / m) * fine.values[sel] * fine.dz[sel])]
        return [(SumKernel("log"), -(fine.values[sel] * fine.speed[sel]) / m)]
    w = (TWO_PI / m) * fine.values[sel] * fine.speed[sel]
    kinds = {"single": "helmholtz_slp", "double": "helmholtz_dlp",
             "combined": "helmholtz_combined"}
    return [(SumKernel(kinds[kernel.layer], kernel.omega,
                       normals=fine.normal[sel]), w)]


def _far_sum(kernel: Kernel, fine: FineNodes, targets: np.ndarray,
             backend: str, accuracy_eps: float, sel=slice(None)) -> np.ndarray:
    if backend not in BACKENDS:
        raise ValueError("backend must be direct or tree")
    desc = BACKENDS[backend]
    out = np.zeros(targets.shape, dtype=complex)
    for kern, w in _split_weights(kernel, fine, sel):
        if not desc.supports(kern.kind):
            raise BackendCapabilityError(
                f"{desc.name} backend cannot sum {kern.kind} kernels")
        if backend == "direct":
            out += direct_backend(fine.z[sel], w, kern, targets)
        else:
            out += tree_backend_laplace(fine.z[sel], w, targets, accuracy_eps,
                                        kind=kern.kind)
    return out


def split_evaluate(kernel: Kernel, density: Density, params: CloseEvalParams,
                   targets: np.ndarray, backend: str = "direct",
                   accuracy_eps: float = 1e-12,
                   cutoff_factor: float = 1.5,
                   cover: BoxCover | None = None):
    """Near/far split evaluation: one global backend sum over all fine nodes,
    corrected per box by a near-band expansion minus the near direct sum.

    Returns (values, method_tags); Laplace values are the physical real part.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    curve = density.curve
    if cover is None:
        cover = params.make_cover(curve, density.N)
    fine = FineNodes.from_density(density, params.fine_count(density.N))
    box_idx = classify_targets(cover, targets)
    vals = _far_sum(kernel, fine, targets, backend, accuracy_eps)
    tags = np.where(box_idx >= 0, "split", "native")
    for b in np.unique(box_idx[box_idx >= 0]):
        inbox = box_idx == b
        G = choose_cutoff(cover, int(b), factor=cutoff_factor)
        ns = near_set(cover, int(b), fine.z, G)
        sel = ns.j_near
        z0 = cover.centers[b]
        if kernel.pde == "laplace":
            if kernel.layer == "double":
                coeffs = _taylor_coeffs_dlp(fine, z0, params.p, sel)
            else:
                coeffs = _taylor_coeffs_slp(fine, z0, params.p, sel)
            kind = "laplace_taylor"
        else:
            coeffs = _fb_coeffs(kernel, fine, z0, params.p, sel)
            kind = "helmholtz_fb"
        exp = LocalExpansion(center=z0, kind=kind, omega=kernel.omega,
                             coeffs=coeffs, radius=float(cover.radii[b]),
                             box_index=int(b))
        corr = _far_sum(kernel, fine, targets[inbox], "direct", accuracy_eps,
                        sel=sel)
        vals[inbox] += eval_expansion(exp, targets[inbox]) - corr
    if kernel.pde == "laplace":
        return vals.real, tags
    return vals, tags
