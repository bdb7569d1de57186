"""Per-vertex normals and principal curvatures from local polynomial fits.

Each vertex gets a height-function fit over its 2-ring neighborhood in a frame
aligned with the area-weighted vertex normal.  Boundary vertices see a
one-sided neighborhood; their fits use a wider ring and cubic terms so the
missing half does not bias the second derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .gauge import Gauge
from .mesh import HalfSpaceMesh


@dataclass(frozen=True, eq=False)
class CurvatureField:
    normals: np.ndarray
    mean_curvature: np.ndarray
    principal: np.ndarray  # (V, n) ascending
    anisotropic_normals: np.ndarray
    valid: np.ndarray
    theta: float

    @property
    def H(self) -> np.ndarray:
        return self.mean_curvature


@dataclass(frozen=True, eq=False)
class BoundaryFrame:
    vertex: int
    mu: np.ndarray
    nu_bar: np.ndarray
    n_bar: np.ndarray
    angle: float


@dataclass(frozen=True, eq=False)
class ContactProfile:
    frames: list
    target: float
    max_deviation: float
    mean_deviation: float
    no_contact: bool

    @property
    def angles(self) -> np.ndarray:
        return np.array([f.angle for f in self.frames])


def vertex_normals(mesh: HalfSpaceMesh) -> np.ndarray:
    """Area-weighted average of incident element normals."""
    k = mesh.dimension + 1
    acc = np.zeros_like(mesh.vertices)
    for j in range(k):
        np.add.at(acc, mesh.elements[:, j], mesh.element_vectors)
    return acc / np.linalg.norm(acc, axis=1, keepdims=True)


def _ring(adj: sparse.csr_matrix, k: int) -> sparse.csr_matrix:
    reach = adj.copy()
    power = adj.copy()
    for _ in range(k - 1):
        power = (power @ adj).tocsr()
        reach = reach + power
    reach = reach.tocsr()
    reach.setdiag(0)
    reach.eliminate_zeros()
    reach.data[:] = 1.0
    return reach


def _padded(rows: sparse.csr_matrix, idx: np.ndarray):
    sub = rows[idx]
    counts = np.diff(sub.indptr)
    kmax = int(counts.max(initial=0))
    nbr = np.zeros((len(idx), kmax), dtype=np.int64)
    mask = np.arange(kmax)[None, :] < counts[:, None]
    nbr[mask] = sub.indices
    return nbr, mask, counts


def _tangent_frames(normals):
    # any unit vector not parallel to the normal seeds the first tangent
    seed = np.where(np.abs(normals[:, :1]) < 0.9, np.array([[1.0, 0.0, 0.0]]), np.array([[0.0, 1.0, 0.0]]))
    t1 = np.cross(normals, seed)
    t1 /= np.linalg.norm(t1, axis=1, keepdims=True)
    t2 = np.cross(normals, t1)
    return t1, t2


def _fit_surface(pts, center, nrm, nbr, mask, cubic):
    t1, t2 = _tangent_frames(nrm)
    d = pts[nbr] - center[:, None, :]
    u = np.einsum("vkj,vj->vk", d, t1)
    v = np.einsum("vkj,vj->vk", d, t2)
    w = np.einsum("vkj,vj->vk", d, nrm)
    scale = np.sqrt(np.sum(mask * (u * u + v * v), axis=1) / np.maximum(mask.sum(axis=1), 1))
    scale = np.where(scale > 0, scale, 1.0)[:, None]
    u, v, w = u / scale, v / scale, w / scale
    cols = [u * u, u * v, v * v, u, v]
    if cubic:
        cols += [u ** 3, u * u * v, u * v * v, v ** 3]
    phi = np.stack(cols, axis=-1) * mask[..., None]
    ata = np.einsum("vki,vkj->vij", phi, phi)
    atb = np.einsum("vki,vk->vi", phi, w * mask)
    ata += 1e-12 * np.eye(ata.shape[-1])[None]
    coef = np.linalg.solve(ata, atb[..., None])[..., 0]
    a, b, c, du, dv = (coef[:, i] for i in range(5))
    s = scale[:, 0]
    hess = np.stack([np.stack([2 * a, b], -1), np.stack([b, 2 * c], -1)], -2) / s[:, None, None]
    grad = np.stack([du, dv], -1)
    g1 = np.eye(2)[None] + grad[:, :, None] * grad[:, None, :]
    wnorm = np.sqrt(1.0 + np.sum(grad * grad, axis=1))
    shape_op = -np.linalg.solve(g1, hess) / wnorm[:, None, None]
    kappa = np.sort(np.linalg.eigvals(shape_op).real, axis=1)
    normal = (nrm - du[:, None] * t1 - dv[:, None] * t2) / wnorm[:, None]
    return normal, kappa


def _fit_curve(pts, center, nrm, nbr, mask, cubic):
    tan = np.column_stack([-nrm[:, 1], nrm[:, 0]])
    d = pts[nbr] - center[:, None, :]
    u = np.einsum("vkj,vj->vk", d, tan)
    w = np.einsum("vkj,vj->vk", d, nrm)
    scale = np.sqrt(np.sum(mask * u * u, axis=1) / np.maximum(mask.sum(axis=1), 1))
    scale = np.where(scale > 0, scale, 1.0)[:, None]
    u, w = u / scale, w / scale
    cols = [u * u, u] + ([u ** 3] if cubic else [])
    phi = np.stack(cols, axis=-1) * mask[..., None]
    ata = np.einsum("vki,vkj->vij", phi, phi) + 1e-12 * np.eye(len(cols))[None]
    atb = np.einsum("vki,vk->vi", phi, w * mask)
    coef = np.linalg.solve(ata, atb[..., None])[..., 0]
    a, du = coef[:, 0], coef[:, 1]
    wnorm = np.sqrt(1.0 + du * du)
    kappa = (-2 * a / scale[:, 0] / wnorm ** 3)[:, None]
    normal = (nrm - du[:, None] * tan) / wnorm[:, None]
    return normal, kappa


def estimate_curvature(mesh: HalfSpaceMesh, g: Gauge, rings: int = 2, boundary_rings: int = 3,
                       refine: int = 1) -> CurvatureField:
    """Fit normals and principal curvatures at every vertex.

    Vertices whose neighborhood is too small for the fit get NaN entries and
    ``valid = False``.  ``refine`` re-runs the fit in the frame of the fitted
    normal, which removes most of the tilt bias of the initial normal.
    """
    n = mesh.dimension
    pts = mesh.vertices
    nv = mesh.n_vertices
    on_boundary = np.zeros(nv, dtype=bool)
    on_boundary[mesh.boundary_vertices] = True
    normals = np.full((nv, n + 1), np.nan)
    kappa = np.full((nv, n), np.nan)
    init = vertex_normals(mesh)
    fit = _fit_surface if n == 2 else _fit_curve
    groups = [(~on_boundary, rings, False), (on_boundary, boundary_rings, True)]
    for sel, k, cubic in groups:
        idx = np.flatnonzero(sel)
        if len(idx) == 0:
            continue
        nbr, mask, counts = _padded(_ring(mesh.adjacency, k), idx)
        need = (9 if cubic else 5) if n == 2 else (3 if cubic else 2)
        ok = counts >= need
        # fall back to a quadratic fit where a cubic one is underdetermined
        if cubic and n == 2:
            ok_q = (counts >= 5) & ~ok
        elif cubic:
            ok_q = (counts >= 2) & ~ok
        else:
            ok_q = np.zeros_like(ok)
        for use, cub in ((ok, cubic), (ok_q, False)):
            if not np.any(use):
                continue
            ii = idx[use]
            nm = init[ii]
            for _ in range(1 + refine):
                nm, kp = fit(pts, pts[ii], nm, nbr[use], mask[use], cub)
            normals[ii] = nm
            kappa[ii] = kp
    valid = np.all(np.isfinite(kappa), axis=1)
    H = kappa.sum(axis=1)
    nu_f = normals.copy()
    nu_f[:, -1] -= math.cos(g.theta)
    return CurvatureField(normals, H, kappa, nu_f, valid, g.theta)


def contact_angle_profile(mesh: HalfSpaceMesh, field: CurvatureField) -> ContactProfile:
    """Measured contact angle arccos<nu, E> with boundary frames at every boundary vertex."""
    bv = mesh.boundary_vertices
    if len(bv) == 0:
        return ContactProfile([], field.theta, float("nan"), float("nan"), True)
    n = mesh.dimension
    v = mesh.vertices
    e_up = np.zeros(n + 1)
    e_up[-1] = 1.0
    frames = []
    if n == 2:
        order = {}
        for loop in mesh.boundary_loops:
            for k, i in enumerate(loop):
                order[int(i)] = (int(loop[k - 1]), int(loop[(k + 1) % len(loop)]))
        for i in bv:
            prev, nxt = order[int(i)]
            t = v[nxt] - v[prev]
            t[-1] = 0.0
            t /= np.linalg.norm(t)
            nu_bar = np.array([t[1], -t[0], 0.0])
            nu = field.normals[i]
            mu = np.cross(t, nu)
            mu /= np.linalg.norm(mu)
            if mu[-1] > 0:
                mu = -mu
            frames.append(_frame(i, mu, nu_bar, nu, e_up))
    else:
        heads = {int(ch[0]) for ch in mesh.chains if len(ch) > 1}
        for i in bv:
            # an arc traversed counter-clockwise starts at its right end
            nu_bar = np.array([1.0, 0.0]) if int(i) in heads else np.array([-1.0, 0.0])
            nu = field.normals[i]
            mu = np.array([-nu[1], nu[0]])
            if mu[-1] > 0:
                mu = -mu
            frames.append(_frame(i, mu, nu_bar, nu, e_up))
    ang = np.array([f.angle for f in frames])
    dev = np.abs(ang - field.theta)
    return ContactProfile(frames, field.theta, float(np.nanmax(dev)), float(np.nanmean(dev)), False)


def _frame(i, mu, nu_bar, nu, e_up):
    angle = math.acos(float(np.clip(nu @ e_up, -1.0, 1.0))) if np.all(np.isfinite(nu)) else float("nan")
    return BoundaryFrame(int(i), mu, nu_bar, -e_up, angle)
