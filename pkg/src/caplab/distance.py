"""Exact shifted distance from points to a piecewise-linear hypersurface.

u(y) = min_{z in Sigma} F^o(z - y).  Since F^o(z - y) <= s exactly when
|z - (y - s cos(theta) E)| <= s, the decision "u(y) > r" is a Euclidean
ball-emptiness test, and the value on a single element solves the monotone
equation dist(y - s cos(theta) E, element) = s.

Elements are grouped into small spatial patches.  Each patch keeps a bounding
sphere and a bounding slab along its mean normal; the slab bound stays tight
for query points deep inside curved surfaces, where box-based trees lose all
pruning power because every part of the surface is nearly equidistant.
"""

from __future__ import annotations

import numpy as np

from .gauge import Gauge
from .mesh import HalfSpaceMesh

PAIR_BUDGET = 1 << 21


def _split_groups(points: np.ndarray, size: int) -> list:
    groups, stack = [], [np.arange(len(points))]
    while stack:
        idx = stack.pop()
        if len(idx) <= size:
            groups.append(idx)
            continue
        p = points[idx]
        ax = int(np.argmax(p.max(axis=0) - p.min(axis=0)))
        half = len(idx) // 2
        order = np.argpartition(p[:, ax], half)
        stack.append(idx[order[half:]])
        stack.append(idx[order[:half]])
    return groups


def closest_on_triangles(p, a, b, c):
    """Closest points on triangles (a, b, c) to points p, all arrays of shape (k, 3)."""
    ab, ac, ap = b - a, c - a, p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2
    with np.errstate(divide="ignore", invalid="ignore"):
        denom = 1.0 / (va + vb + vc)
        v = vb * denom
        w = vc * denom
        out = a + v[:, None] * ab + w[:, None] * ac
        # edge regions
        t_ab = d1 / (d1 - d3)
        t_ac = d2 / (d2 - d6)
        t_bc = (d4 - d3) / ((d4 - d3) + (d5 - d6))
    m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    out[m] = a[m] + t_ab[m, None] * ab[m]
    m2 = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    out[m2] = a[m2] + t_ac[m2, None] * ac[m2]
    m3 = (va <= 0) & ((d4 - d3) >= 0) & ((d5 - d6) >= 0)
    out[m3] = b[m3] + t_bc[m3, None] * (c[m3] - b[m3])
    # vertex regions take precedence
    ma = (d1 <= 0) & (d2 <= 0)
    out[ma] = a[ma]
    mb = (d3 >= 0) & (d4 <= d3)
    out[mb] = b[mb]
    mc = (d6 >= 0) & (d5 <= d6)
    out[mc] = c[mc]
    return out


def closest_on_segments(p, a, b):
    ab = b - a
    t = np.einsum("ij,ij->i", p - a, ab) / np.einsum("ij,ij->i", ab, ab)
    return a + np.clip(t, 0.0, 1.0)[:, None] * ab


class MeshDistance:
    """Exact shifted distance to the elements of a mesh."""

    def __init__(self, mesh: HalfSpaceMesh, g: Gauge, group_size: int = 24):
        self.mesh = mesh
        self.g = g
        self.c = g.cos_theta
        self.dim = mesh.dimension
        corners = mesh.vertices[mesh.elements]
        groups = _split_groups(mesh.element_centroids, group_size)
        order = np.concatenate(groups)
        self.corners = corners[order]
        self.elem_ids = order
        self.normals = mesh.element_normals[order]
        self.offsets = np.einsum("ij,ij->i", self.normals, self.corners[:, 0])
        starts = np.cumsum([0] + [len(gp) for gp in groups])
        self.starts = starts
        self.sizes = np.diff(starts)
        centers, radii, pn, thick, rep = [], [], [], [], []
        for s, e in zip(starts[:-1], starts[1:]):
            pts = self.corners[s:e].reshape(-1, mesh.ambient)
            ctr = 0.5 * (pts.max(axis=0) + pts.min(axis=0))
            nrm = mesh.element_vectors[order[s:e]].sum(axis=0)
            ln = np.linalg.norm(nrm)
            nrm = nrm / ln if ln > 0 else np.eye(mesh.ambient)[-1]
            centers.append(ctr)
            radii.append(np.linalg.norm(pts - ctr, axis=1).max())
            pn.append(nrm)
            thick.append(np.abs((pts - ctr) @ nrm).max())
            rep.append(pts[0])
        self.p_center = np.array(centers)
        self.p_radius = np.array(radii)
        self.p_normal = np.array(pn)
        self.p_thick = np.array(thick)
        self.p_rep = np.array(rep)
        self._cc = np.einsum("ij,ij->i", self.p_center, self.p_center)[None]
        self._cn = np.einsum("ij,ij->i", self.p_center, self.p_normal)[None]
        self._rr = np.einsum("ij,ij->i", self.p_rep, self.p_rep)[None]

    # -- element-level helpers -------------------------------------------------

    def _closest(self, q, elem):
        k = self.corners[elem]
        if self.dim == 2:
            return closest_on_triangles(q, k[:, 0], k[:, 1], k[:, 2])
        return closest_on_segments(q, k[:, 0], k[:, 1])

    def _patch_bounds(self, q):
        qq = np.einsum("ij,ij->i", q, q)[:, None]
        dist = np.sqrt(np.maximum(qq - 2.0 * q @ self.p_center.T + self._cc, 0.0))
        slab = np.abs(q @ self.p_normal.T - self._cn)
        lower = np.maximum(dist - self.p_radius, slab - self.p_thick)
        rep = np.sqrt(np.maximum(qq - 2.0 * q @ self.p_rep.T + self._rr, 0.0))
        return lower, rep

    def _expand(self, qi, pi, q, radius):
        """Element pairs of candidate patches that pass the supporting-plane bound."""
        cnt = self.sizes[pi]
        qe = np.repeat(qi, cnt)
        base = np.repeat(self.starts[pi] - np.cumsum(cnt) + cnt, cnt)
        el = base + np.arange(len(qe))
        plane = np.abs(np.einsum("ij,ij->i", q[qe], self.normals[el]) - self.offsets[el])
        keep = plane <= radius[qe]
        return qe[keep], el[keep]

    def _chunks(self, m):
        step = max(1, min(4096, PAIR_BUDGET // max(1, len(self.p_center) * 4)))
        for s in range(0, m, step):
            yield slice(s, min(m, s + step))

    # -- public queries ------------------------------------------------------------

    def exceeds(self, y, r) -> np.ndarray:
        """True where u(y) > r (r scalar or per-point)."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        r = np.broadcast_to(np.asarray(r, dtype=float), (len(y),))
        out = np.ones(len(y), dtype=bool)
        for sl in self._chunks(len(y)):
            q = y[sl].copy()
            rr = r[sl].copy()
            q[:, -1] -= rr * self.c
            # a patch vertex inside the Wulff ball settles the query at once
            qq = np.einsum("ij,ij->i", q, q)[:, None]
            d2 = qq - 2.0 * q @ self.p_rep.T + self._rr
            res = ~np.any(d2 <= (rr * rr)[:, None], axis=1)
            open_rows = np.flatnonzero(res)
            lower, _ = self._patch_bounds(q[open_rows])
            qi, pi = np.nonzero(lower <= rr[open_rows, None])
            qi = open_rows[qi]
            qe, el = self._expand(qi, pi, q, rr)
            for s in range(0, len(qe), PAIR_BUDGET):
                a, e = qe[s:s + PAIR_BUDGET], el[s:s + PAIR_BUDGET]
                z = self._closest(q[a], e)
                d = np.linalg.norm(z - q[a], axis=1)
                res[a[d <= rr[a]]] = False
            out[sl] = res
        return out

    def value(self, y, tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
        """u(y) to round-off, by Newton iteration on each candidate element."""
        y = np.atleast_2d(np.asarray(y, dtype=float))
        out = np.empty(len(y))
        for sl in self._chunks(len(y)):
            yy = y[sl]
            m = len(yy)
            upper = self.g.dual(self.p_rep[None, :, :] - yy[:, None, :]).min(axis=1)
            # tighten the bound with the elements of the most promising patch
            lower, _ = self._patch_bounds(yy)
            first = np.argmin(lower, axis=1)
            qe, el = self._expand(np.arange(m), first, yy, np.full(m, np.inf))
            best = upper.copy()
            np.minimum.at(best, qe, self._element_values(yy[qe], el, tol, max_iter))
            q = yy.copy()
            q[:, -1] -= best * self.c
            lower, _ = self._patch_bounds(q)
            lower[np.arange(m), first] = np.inf
            qi, pi = np.nonzero(lower <= best[:, None])
            qe, el = self._expand(qi, pi, q, best)
            if len(qe):
                for s in range(0, len(qe), PAIR_BUDGET):
                    a, e = qe[s:s + PAIR_BUDGET], el[s:s + PAIR_BUDGET]
                    np.minimum.at(best, a, self._element_values(yy[a], e, tol, max_iter))
            out[sl] = best
        return out

    def _element_values(self, y, el, tol, max_iter):
        c = self.c
        z = self._closest(y, el)
        d0 = np.linalg.norm(z - y, axis=1)
        s = d0 / (1.0 + abs(c))  # F^o >= |.| / M_F keeps the start left of the root
        scale = np.maximum(d0, 1e-300)
        active = np.arange(len(y))
        for _ in range(max_iter):
            if len(active) == 0:
                break
            q = y[active].copy()
            q[:, -1] -= s[active] * c
            z = self._closest(q, el[active])
            w = q - z
            dist = np.linalg.norm(w, axis=1)
            phi = dist - s[active]
            with np.errstate(divide="ignore", invalid="ignore"):
                dphi = -c * np.where(dist > 0, w[:, -1] / dist, 0.0) - 1.0
            step = -phi / dphi
            s[active] += step
            active = active[np.abs(step) > tol * scale[active]]
        return s

    def euclidean(self, y) -> np.ndarray:
        """Euclidean distance to the mesh (the theta = pi/2 shifted distance)."""
        if self.c == 0.0:
            return self.value(y)
        return MeshDistance(self.mesh, Gauge(np.pi / 2, self.g.dimension)).value(y)
