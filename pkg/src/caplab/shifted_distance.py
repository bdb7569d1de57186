"""Shifted distance u(y) = min_{z in Sigma} F^o(z - y) and its super-level sets.

Distances are exact with respect to the piecewise-linear surface (see
:mod:`caplab.distance`).  A weighted point sampling of Sigma is kept alongside
for surface integrals over balls and for Hausdorff distances; its spacing h_s
is the F^o-distance from any surface point to the nearest sample.
"""

from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .distance import MeshDistance
from .gauge import Gauge
from .mesh import HalfSpaceMesh, point_diameter

CHUNK = 1 << 16


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get("CAPLAB_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True, eq=False)
class SurfaceSampling:
    points: np.ndarray
    weights: np.ndarray
    element: np.ndarray
    bary: np.ndarray  # barycentric weights of the element's vertices
    h_euclid: float
    h_s: float
    tree: cKDTree = field(repr=False)
    distance: MeshDistance = field(repr=False)

    def __len__(self):
        return len(self.points)

    def interpolate(self, mesh: HalfSpaceMesh, vertex_values) -> np.ndarray:
        vals = np.asarray(vertex_values)
        corner = vals[mesh.elements[self.element]]
        if corner.ndim == 2:
            return np.einsum("sk,sk->s", self.bary, corner)
        return np.einsum("sk,sk...->s...", self.bary, corner)


def default_length(mesh: HalfSpaceMesh) -> float:
    """Half the largest component diameter; never exceeds the radius of a cap or sphere."""
    labels = mesh.component_labels
    best = 0.0
    for c in range(mesh.n_components):
        p = mesh.vertices[labels == c]
        best = max(best, 0.5 * point_diameter(p))
    return best


def build_sampling(mesh: HalfSpaceMesh, g: Gauge, h_target: float | None = None) -> SurfaceSampling:
    """Subdivide every element until each sample is within F^o-distance h_target of its patch."""
    m_dual_max = g.bounds()[3]
    if h_target is None:
        h_target = 0.01 * default_length(mesh)
    h_e = h_target / m_dual_max
    v, el = mesh.vertices, mesh.elements
    corners = v[el]
    if mesh.dimension == 2:
        edges = np.stack([corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 1],
                          corners[:, 0] - corners[:, 2]], axis=1)
        emax = np.linalg.norm(edges, axis=2).max(axis=1)
        # distance from a subtriangle's centroid to its corners is at most 2/3 of its longest edge
        k = np.maximum(1, np.ceil((2.0 / 3.0) * emax / h_e)).astype(int)
        h_real = float(np.max((2.0 / 3.0) * emax / k))
    else:
        emax = np.linalg.norm(corners[:, 1] - corners[:, 0], axis=1)
        k = np.maximum(1, np.ceil(0.5 * emax / h_e)).astype(int)
        h_real = float(np.max(0.5 * emax / k))
    pts, wts, eid, bary = [], [], [], []
    for kk in np.unique(k):
        ids = np.flatnonzero(k == kk)
        tb = _template(mesh.dimension, int(kk))
        b = np.broadcast_to(tb, (len(ids),) + tb.shape)
        pts.append(np.einsum("esk,ekd->esd", b, corners[ids]).reshape(-1, mesh.ambient))
        wts.append(np.repeat(mesh.element_measures[ids] / len(tb), len(tb)))
        eid.append(np.repeat(ids, len(tb)))
        bary.append(np.tile(tb, (len(ids), 1)))
    # order samples by element so the layout is independent of the grouping
    eid = np.concatenate(eid)
    order = np.lexsort((np.concatenate([np.tile(np.arange(len(_template(mesh.dimension, int(kk)))),
                                                         int(np.sum(k == kk))) for kk in np.unique(k)]), eid))
    points = np.concatenate(pts)[order]
    return SurfaceSampling(
        points=points,
        weights=np.concatenate(wts)[order],
        element=eid[order],
        bary=np.concatenate(bary)[order],
        h_euclid=h_real,
        h_s=m_dual_max * h_real,
        tree=cKDTree(points),
        distance=MeshDistance(mesh, g),
    )


def _template(dim: int, k: int) -> np.ndarray:
    """Barycentric coordinates of the k^dim sub-element centroids."""
    if dim == 1:
        t = (np.arange(k) + 0.5) / k
        return np.column_stack([1 - t, t])
    rows = []
    for i in range(k):
        for j in range(k - i):
            rows.append(((i + 1 / 3) / k, (j + 1 / 3) / k))
            if i + j <= k - 2:
                rows.append(((i + 2 / 3) / k, (j + 2 / 3) / k))
    uv = np.array(rows)
    return np.column_stack([1 - uv.sum(axis=1), uv[:, 0], uv[:, 1]])


def _check_gauge(sampling: SurfaceSampling, g: Gauge):
    if sampling.distance.g.theta != g.theta:
        raise ValueError("sampling was built for a different contact angle")


def shifted_dist(y, sampling: SurfaceSampling, g: Gauge) -> np.ndarray:
    """u(y), exact for the mesh; the mesh itself is within h_s of the sampled surface."""
    if len(sampling) == 0:
        raise ValueError("empty sampling")
    _check_gauge(sampling, g)
    return sampling.distance.value(y)


def exceeds(y, r, sampling: SurfaceSampling, g: Gauge) -> np.ndarray:
    """Decide u(y) > r without computing u."""
    _check_gauge(sampling, g)
    return sampling.distance.exceeds(y, r)


def sample_dist(y, sampling: SurfaceSampling, g: Gauge, max_iter: int = 500) -> np.ndarray:
    """min over the samples of F^o(z - y), by descent through nested Wulff balls."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    c = g.cos_theta
    _, idx = sampling.tree.query(y)
    s = g.dual(sampling.points[idx] - y)
    active = np.arange(len(y))
    for _ in range(max_iter):
        if len(active) == 0:
            break
        p = y[active].copy()
        p[:, -1] -= s[active] * c
        d, j = sampling.tree.query(p)
        cand = g.dual(sampling.points[j] - y[active])
        better = cand < s[active]
        s[active[better]] = cand[better]
        active = active[better & (d < s[active])]
    return s


# ---------------------------------------------------------------------------
# super-level sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VolumeEstimate:
    value: float
    stderr: float
    n_samples: int
    box_volume: float
    low_budget: bool = False


def _grid(lo, hi, per_axis):
    axes = [np.linspace(lo[i], hi[i], per_axis) for i in range(len(lo))]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def in_superlevel(mesh, sampling, g, y, r) -> np.ndarray:
    """Membership in Omega_r = {y in closed Omega : u(y) > r}."""
    y = np.atleast_2d(y)
    out = mesh.contains(y, z_tol=mesh.tol_plane)
    sel = np.flatnonzero(out)
    out[sel] = exceeds(y[sel], r, sampling, g)
    return out


def certified_box(mesh, sampling, g, r, per_axis=(24, 24)):
    """Axis box that provably contains Omega_r, or None when Omega_r is empty.

    u is Lipschitz with constant 1/(1-|cos theta|), so every point of Omega_r
    lies within half a cell diagonal of a grid node in Omega_{r - margin}.  A
    point of Omega next to an exterior node is within that half diagonal of
    Sigma, hence has u below M_dual times it; for r above that bound exterior
    nodes can be ignored.  Each pass shrinks the box and regrids it.
    """
    lo, hi = mesh.bbox[0].copy(), mesh.bbox[1].copy()
    lo[-1] = max(lo[-1], 0.0)
    for k in per_axis:
        nodes = _grid(lo, hi, k)
        spacing = (hi - lo) / (k - 1)
        margin = g.lipschitz * 0.5 * float(np.linalg.norm(spacing))
        if r <= margin:
            continue
        hot = in_superlevel(mesh, sampling, g, nodes.reshape(-1, len(lo)), r - margin)
        if not np.any(hot):
            return None
        idx = np.argwhere(hot.reshape(nodes.shape[:-1]))
        new_lo = lo + idx.min(axis=0) * spacing - spacing
        new_hi = lo + idx.max(axis=0) * spacing + spacing
        lo = np.maximum(new_lo, lo)
        hi = np.minimum(new_hi, hi)
    return lo, hi


def _mc_chunks(n_samples, seed):
    n_chunks = max(1, math.ceil(n_samples / CHUNK))
    seqs = np.random.SeedSequence(seed).spawn(n_chunks)
    sizes = [CHUNK] * (n_chunks - 1) + [n_samples - CHUNK * (n_chunks - 1)]
    return list(zip(seqs, sizes))


def run_chunks(fn, n_samples, seed, workers=None):
    """Apply ``fn((seed_sequence, size))`` to fixed-size chunks; results do not depend on workers."""
    chunks = _mc_chunks(n_samples, seed)
    w = worker_count(workers)
    if w == 1:
        return [fn(c) for c in chunks]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, chunks))


def _box_volume(lo, hi):
    return float(np.prod(np.maximum(hi - lo, 0.0)))


def superlevel_volume(mesh, sampling, g, r, n_samples=1_000_000, seed=0, workers=None) -> VolumeEstimate:
    """Monte-Carlo |Omega_r| with binomial standard error."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    low = n_samples < 10_000
    if low:
        warnings.warn("fewer than 1e4 Monte-Carlo samples", RuntimeWarning, stacklevel=2)
    box = certified_box(mesh, sampling, g, r)
    if box is None:
        return VolumeEstimate(0.0, 0.0, n_samples, 0.0, low)
    lo, hi = box
    vol = _box_volume(lo, hi)

    def work(chunk):
        seq, size = chunk
        pts = np.random.default_rng(seq).uniform(lo, hi, (size, len(lo)))
        return int(np.count_nonzero(in_superlevel(mesh, sampling, g, pts, r)))

    hits = sum(run_chunks(work, n_samples, seed, workers))
    p = hits / n_samples
    return VolumeEstimate(vol * p, vol * math.sqrt(p * (1 - p) / n_samples), n_samples, vol, low)


def level_cloud(mesh, sampling, g, r, lo, hi, per_axis=64) -> np.ndarray:
    """Points on the relative boundary of Omega_r.

    Level-set crossings along grid edges (located by linear interpolation of
    exact u values at the two end nodes) plus the trace of Omega_r on the
    hyperplane, sampled on a finer planar grid.
    """
    d = len(lo)
    nodes = _grid(lo, hi, per_axis)
    flat = nodes.reshape(-1, d)
    inside = mesh.contains(flat, z_tol=mesh.tol_plane)
    above = np.zeros(len(flat), dtype=bool)
    sel = np.flatnonzero(inside)
    above[sel] = exceeds(flat[sel], r, sampling, g)
    inside = inside.reshape(nodes.shape[:-1])
    above = above.reshape(nodes.shape[:-1])
    ends_a, ends_b = [], []
    lin = np.arange(len(flat)).reshape(nodes.shape[:-1])
    for ax in range(d):
        a = [slice(None)] * d
        b = [slice(None)] * d
        a[ax] = slice(0, -1)
        b[ax] = slice(1, None)
        a, b = tuple(a), tuple(b)
        cross = (above[a] != above[b]) & inside[a] & inside[b]
        ends_a.append(lin[a][cross])
        ends_b.append(lin[b][cross])
    ia = np.concatenate(ends_a)
    ib = np.concatenate(ends_b)
    need = np.unique(np.concatenate([ia, ib]))
    u = np.zeros(len(flat))
    if len(need):
        u[need] = shifted_dist(flat[need], sampling, g)
    ua, ub = u[ia] - r, u[ib] - r
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.clip(np.where(ua != ub, ua / (ua - ub), 0.5), 0.0, 1.0)
    pts = [flat[ia] + t[:, None] * (flat[ib] - flat[ia])]
    if lo[-1] <= 0.0:
        fine = _grid(lo[:-1], hi[:-1], 4 * per_axis).reshape(-1, d - 1)
        keep = mesh.in_wetted_region(fine)
        floor = np.column_stack([fine[keep], np.zeros(int(keep.sum()))])
        pts.append(floor[exceeds(floor, r, sampling, g)])
    return np.concatenate(pts)


def dilated_volume(mesh, sampling, g, r, rho, n_samples=1_000_000, seed=0, workers=None, cloud_per_axis=64):
    """Monte-Carlo |(Omega_r + W_rho) n upper half-space|.

    y belongs to the dilation when it lies in Omega_r or within F^o-distance
    rho of the boundary cloud of Omega_r; the latter is a nearest-neighbour
    query at y + rho cos(theta) E.  Also returns the number of accepted
    samples that fail the inclusion u(y) > r - rho - 2 h_s.
    """
    box = certified_box(mesh, sampling, g, r)
    if box is None:
        return VolumeEstimate(0.0, 0.0, n_samples, 0.0), 0
    lo, hi = box
    cloud = level_cloud(mesh, sampling, g, r, lo, hi, cloud_per_axis)
    tree = cKDTree(cloud) if len(cloud) else None
    c = g.cos_theta
    dlo, dhi = lo.copy(), hi.copy()
    dlo[:-1] -= rho
    dhi[:-1] += rho
    dlo[-1] = max(0.0, lo[-1] - rho * c - rho)
    dhi[-1] = hi[-1] - rho * c + rho
    vol = _box_volume(dlo, dhi)
    floor_r = r - rho - 2 * sampling.h_s

    def work(chunk):
        seq, size = chunk
        pts = np.random.default_rng(seq).uniform(dlo, dhi, (size, len(dlo)))
        member = in_superlevel(mesh, sampling, g, pts, r)
        if tree is not None:
            q = pts.copy()
            q[:, -1] += rho * c
            d, _ = tree.query(q)
            member |= d <= rho
        acc = np.flatnonzero(member)
        bad = int(np.count_nonzero(~in_superlevel(mesh, sampling, g, pts[acc], floor_r))) if floor_r > 0 else 0
        return int(len(acc)), bad

    res = run_chunks(work, n_samples, seed, workers)
    hits = sum(h for h, _ in res)
    bad = sum(b for _, b in res)
    p = hits / n_samples
    return VolumeEstimate(vol * p, vol * math.sqrt(p * (1 - p) / n_samples), n_samples, vol), bad


@dataclass(frozen=True)
class LevelSetProfile:
    R: float
    volume: float
    r: list
    estimate: list
    stderr: list
    model: list
    residual: list
    beyond_radius: list
    dilated: list
    max_residual: float
    max_dilated_residual: float
    fitted_constant: float | None
    inclusion_violations: int


def level_profile(mesh, sampling, g, lam, r_grid, rho_grid=(), budget=1_000_000, seed=0,
                  epsilon=None, workers=None) -> LevelSetProfile:
    """|Omega_r| and dilated volumes against (|Omega|/R^{n+1})(R - r)^{n+1}, R = n/lambda.

    The budget is split evenly over the r values and admissible (r, rho)
    pairs; each estimate uses its own certified box and seed stream.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    n = mesh.dimension
    R = n / lam
    V = mesh.volume
    r_grid = [float(r) for r in r_grid]
    pairs = [(r, float(rho)) for r in r_grid for rho in rho_grid if 0 < rho < r]
    per = max(1, budget // max(1, len(r_grid) + len(pairs)))
    seeds = [_seed_int(sq) for sq in np.random.SeedSequence(seed).spawn(len(r_grid) + len(pairs))]

    def model(s):
        return V / R ** (n + 1) * max(R - s, 0.0) ** (n + 1)

    def rel(est, m):
        return (est - m) / m if m > 0 else est

    est, err, mod = [], [], []
    for r, sd in zip(r_grid, seeds):
        ve = superlevel_volume(mesh, sampling, g, r, per, sd, workers)
        est.append(ve.value)
        err.append(ve.stderr)
        mod.append(model(r))
    resid = [rel(e, m) for e, m in zip(est, mod)]
    dil, bad_total = [], 0
    for (r, rho), sd in zip(pairs, seeds[len(r_grid):]):
        ve, bad = dilated_volume(mesh, sampling, g, r, rho, per, sd, workers)
        m = model(r - rho)
        bad_total += bad
        dil.append({"r": r, "rho": rho, "estimate": ve.value, "stderr": ve.stderr, "model": m,
                    "residual": rel(ve.value, m)})
    max_res = max((abs(x) for x in resid), default=0.0)
    max_dil = max((abs(d["residual"]) for d in dil), default=0.0)
    fitted = None
    if epsilon is not None and epsilon > 0:
        gaps = [abs(e - m) for e, m in zip(est, mod)] + [abs(d["estimate"] - d["model"]) for d in dil]
        fitted = max(gaps) / epsilon
    return LevelSetProfile(R, V, r_grid, est, err, mod, resid, [r >= R for r in r_grid], dil,
                           max_res, max_dil, fitted, bad_total)


def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True, eq=False)
class UntouchedArea:
    value: float
    untouched: np.ndarray
    touched_on_gamma: np.ndarray


def untouched_area(mesh, sampling, field, g, r, tol_touch=None) -> UntouchedArea:
    """F(nu)-weighted area of vertices x outside Sigma_r.

    x is in Sigma_r when zeta = x - r nu_F(x) lies in Omega and u(zeta) >= r -
    tol_touch.  Touched vertices on Gamma are reported separately: the
    continuum argument excludes attainment there, the discrete test cannot.
    """
    if tol_touch is None:
        tol_touch = 2 * sampling.h_s
    zeta = mesh.vertices - r * np.nan_to_num(field.anisotropic_normals)
    touched = mesh.contains(zeta, z_tol=max(mesh.tol_plane, tol_touch))
    sel = np.flatnonzero(touched)
    touched[sel] = exceeds(zeta[sel], max(r - tol_touch, 0.0), sampling, g)
    weight = mesh.vertex_areas * g.value(np.nan_to_num(field.normals))
    on_gamma = np.zeros(mesh.n_vertices, dtype=bool)
    on_gamma[mesh.boundary_vertices] = True
    return UntouchedArea(float(np.sum(weight[~touched])), ~touched, touched & on_gamma)
