"""Piecewise-linear hypersurfaces in the closed upper half-space.

A :class:`HalfSpaceMesh` of dimension ``n`` lives in R^{n+1}: polylines in the
plane for ``n = 1`` and triangle meshes in space for ``n = 2``.  The last
coordinate is the height above the supporting hyperplane.  Elements are
oriented so that their normals point out of the enclosed region; for ``n = 1``
that means counter-clockwise traversal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components
from scipy.spatial import ConvexHull, QhullError
from scipy.spatial.distance import pdist

from .report import write_text


class MeshError(ValueError):
    """Validation failure; ``kind`` names the diagnostic."""

    def __init__(self, kind: str, message: str):
        super().__init__(f"{kind}: {message}")
        self.kind = kind


# fixed sub-resolution shift for vertical ray casting; keeps structured query
# grids off mesh edges and vertices
_RAY_JITTER = np.array([0.5377281, 0.3183099])


@dataclass(frozen=True, eq=False)
class HalfSpaceMesh:
    dimension: int
    vertices: np.ndarray
    elements: np.ndarray
    tol_plane: float = 0.0
    flipped_components: tuple = field(default=())

    @property
    def ambient(self) -> int:
        return self.dimension + 1

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    # -- element geometry -------------------------------------------------

    @cached_property
    def element_vectors(self) -> np.ndarray:
        """Outward normal scaled by element measure, one row per element."""
        v, e = self.vertices, self.elements
        if self.dimension == 2:
            return 0.5 * np.cross(v[e[:, 1]] - v[e[:, 0]], v[e[:, 2]] - v[e[:, 0]])
        s = v[e[:, 1]] - v[e[:, 0]]
        return np.column_stack([s[:, 1], -s[:, 0]])

    @cached_property
    def element_measures(self) -> np.ndarray:
        return np.linalg.norm(self.element_vectors, axis=1)

    @cached_property
    def element_normals(self) -> np.ndarray:
        return self.element_vectors / self.element_measures[:, None]

    @cached_property
    def element_centroids(self) -> np.ndarray:
        return self.vertices[self.elements].mean(axis=1)

    @cached_property
    def vertex_areas(self) -> np.ndarray:
        """Lumped mass: each element gives 1/(n+1) of its measure to each vertex."""
        share = np.repeat(self.element_measures / (self.dimension + 1), self.dimension + 1)
        return np.bincount(self.elements.ravel(), weights=share, minlength=self.n_vertices)

    @cached_property
    def adjacency(self) -> sparse.csr_matrix:
        e = self.elements
        k = e.shape[1]
        rows = np.concatenate([e[:, i] for i in range(k) for j in range(k) if i != j])
        cols = np.concatenate([e[:, j] for i in range(k) for j in range(k) if i != j])
        a = sparse.coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(self.n_vertices,) * 2)
        a = a.tocsr()
        a.data[:] = 1.0
        return a

    @cached_property
    def component_labels(self) -> np.ndarray:
        _, labels = connected_components(self.adjacency, directed=False)
        return labels

    @property
    def n_components(self) -> int:
        return int(self.component_labels.max()) + 1 if self.n_vertices else 0

    # -- boundary ---------------------------------------------------------

    @cached_property
    def boundary_edges(self) -> np.ndarray:
        """Boundary edges (n=2) in the orientation induced by their triangle."""
        if self.dimension != 2:
            return np.zeros((0, 2), dtype=int)
        he = _half_edges(self.elements)
        key = np.sort(he, axis=1)
        _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
        return he[counts[inv.ravel()] == 1]

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        if self.dimension == 2:
            return np.unique(self.boundary_edges)
        deg = np.bincount(self.elements.ravel(), minlength=self.n_vertices)
        return np.flatnonzero(deg == 1)

    @cached_property
    def boundary_loops(self) -> list:
        """Closed boundary loops (n=2) as oriented vertex index arrays."""
        if self.dimension != 2:
            return []
        nxt = dict(zip(self.boundary_edges[:, 0].tolist(), self.boundary_edges[:, 1].tolist()))
        loops, seen = [], set()
        for start in nxt:
            if start in seen:
                continue
            loop, v = [], start
            while v not in seen:
                seen.add(v)
                loop.append(v)
                v = nxt[v]
            loops.append(np.array(loop, dtype=int))
        return loops

    @cached_property
    def chains(self) -> list:
        """Open arcs and closed loops (n=1) as ordered vertex index arrays."""
        if self.dimension != 1:
            return []
        e = self.elements
        nxt = dict(zip(e[:, 0].tolist(), e[:, 1].tolist()))
        has_prev = set(e[:, 1].tolist())
        out, seen = [], set()
        starts = [v for v in nxt if v not in has_prev] + list(nxt)
        for start in starts:
            if start in seen:
                continue
            chain, v = [], start
            while v is not None and v not in seen:
                seen.add(v)
                chain.append(v)
                v = nxt.get(v)
            out.append(np.array(chain, dtype=int))
        return out

    @cached_property
    def boundary_measure(self) -> float:
        """|Gamma|: length of boundary loops (n=2) or number of contact points (n=1)."""
        if self.dimension == 1:
            return float(len(self.boundary_vertices))
        be = self.boundary_edges
        return float(np.linalg.norm(self.vertices[be[:, 1]] - self.vertices[be[:, 0]], axis=1).sum())

    # -- global quantities -----------------------------------------------------

    @cached_property
    def area(self) -> float:
        return float(self.element_measures.sum())

    @cached_property
    def volume(self) -> float:
        """|Omega| from the flux of x_{n+1} E; the wetted region contributes nothing."""
        heights = self.element_centroids[:, -1]
        return float(np.sum(heights * self.element_vectors[:, -1]))

    @cached_property
    def wetted_area(self) -> float:
        """|T| from the boundary: shoelace sum over loops, or interval lengths for n=1."""
        v = self.vertices
        if self.dimension == 1:
            total = 0.0
            for ch in self.chains:
                if len(ch) > 1 and ch[0] in self._boundary_set and ch[-1] in self._boundary_set:
                    total += v[ch[0], 0] - v[ch[-1], 0]
            return float(total)
        be = self.boundary_edges
        a, b = v[be[:, 0]], v[be[:, 1]]
        return float(0.5 * np.sum(a[:, 0] * b[:, 1] - b[:, 0] * a[:, 1]))

    @cached_property
    def _boundary_set(self) -> frozenset:
        return frozenset(self.boundary_vertices.tolist())

    @cached_property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @cached_property
    def diameter(self) -> float:
        lo, hi = self.bbox
        return float(np.linalg.norm(hi - lo))

    # -- membership -----------------------------------------------------------

    def in_wetted_region(self, xy) -> np.ndarray:
        """Membership of hyperplane points (first n coordinates) in T."""
        xy = np.atleast_2d(np.asarray(xy, dtype=float))
        if self.dimension == 1:
            x = xy[:, 0]
            inside = np.zeros(len(x), dtype=bool)
            v = self.vertices
            for ch in self.chains:
                if len(ch) > 1 and ch[0] in self._boundary_set and ch[-1] in self._boundary_set:
                    lo, hi = sorted((v[ch[0], 0], v[ch[-1], 0]))
                    inside ^= (x >= lo) & (x <= hi)
            return inside
        be = self.boundary_edges
        if len(be) == 0:
            return np.zeros(len(xy), dtype=bool)
        a = self.vertices[be[:, 0], :2]
        b = self.vertices[be[:, 1], :2]
        out = np.zeros(len(xy), dtype=bool)
        for sl in _chunks(len(xy), max(1, 4_000_000 // max(len(be), 1))):
            px, py = xy[sl, 0, None], xy[sl, 1, None]
            straddle = (a[None, :, 1] > py) != (b[None, :, 1] > py)
            with np.errstate(divide="ignore", invalid="ignore"):
                xcross = a[None, :, 0] + (py - a[None, :, 1]) * (b[None, :, 0] - a[None, :, 0]) / (
                    b[None, :, 1] - a[None, :, 1]
                )
            out[sl] = np.count_nonzero(straddle & (xcross > px), axis=1) % 2 == 1
        return out

    @cached_property
    def _ray_index(self):
        return _RayIndex(self)

    def contains(self, points, z_tol: float = 0.0) -> np.ndarray:
        """Membership in the closed region bounded by Sigma and T.

        Points within ``z_tol`` of the hyperplane are tested against T; points
        above it by parity of upward vertical rays against Sigma.
        """
        p = np.atleast_2d(np.asarray(points, dtype=float))
        z = p[:, -1]
        out = np.zeros(len(p), dtype=bool)
        near = np.abs(z) <= z_tol
        if np.any(near):
            out[near] = self.in_wetted_region(p[near, :-1])
        up = z > z_tol
        if np.any(up):
            out[up] = self._ray_index.parity(p[up])
        return out


class _RayIndex:
    """Uniform grid over the horizontal projection for upward ray parity."""

    def __init__(self, mesh: HalfSpaceMesh):
        self.mesh = mesh
        self.dim = mesh.dimension
        lo, hi = mesh.bbox
        scale = max(mesh.diameter, 1e-300)
        self.jitter = 1e-9 * scale * _RAY_JITTER[: self.dim]
        verts = mesh.vertices[mesh.elements]  # (E, n+1, n+1)
        horiz = verts[:, :, :-1]
        if self.dim == 2:
            a, b, c = horiz[:, 0], horiz[:, 1], horiz[:, 2]
            det = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
            keep = np.abs(det) > 1e-14 * scale * scale
        else:
            keep = np.abs(horiz[:, 1, 0] - horiz[:, 0, 0]) > 0.0
        self.tri = verts[keep]
        ne = max(len(self.tri), 1)
        self.lo = lo[:-1].copy()
        extent = np.maximum(hi[:-1] - lo[:-1], 1e-12 * scale)
        cells_per_axis = max(1, int(round((ne / 4.0) ** (1.0 / self.dim))))
        self.shape = np.full(self.dim, min(cells_per_axis, 512), dtype=int)
        self.cell = extent / self.shape
        emin = self.tri[:, :, :-1].min(axis=1)
        emax = self.tri[:, :, :-1].max(axis=1)
        i0 = self._cell_coords(emin)
        i1 = self._cell_coords(emax)
        pairs_cell, pairs_elem = [], []
        spans = i1 - i0 + 1
        if self.dim == 1:
            for off in range(int(spans.max(initial=1))):
                m = off < spans[:, 0]
                pairs_cell.append(i0[m, 0] + off)
                pairs_elem.append(np.flatnonzero(m))
        else:
            for ox in range(int(spans[:, 0].max(initial=1))):
                for oy in range(int(spans[:, 1].max(initial=1))):
                    m = (ox < spans[:, 0]) & (oy < spans[:, 1])
                    pairs_cell.append((i0[m, 0] + ox) * self.shape[1] + i0[m, 1] + oy)
                    pairs_elem.append(np.flatnonzero(m))
        cells = np.concatenate(pairs_cell) if pairs_cell else np.zeros(0, int)
        elems = np.concatenate(pairs_elem) if pairs_elem else np.zeros(0, int)
        order = np.argsort(cells, kind="stable")
        self.cell_elems = elems[order]
        n_cells = int(np.prod(self.shape))
        self.cell_start = np.zeros(n_cells + 1, dtype=np.int64)
        np.cumsum(np.bincount(cells, minlength=n_cells), out=self.cell_start[1:])

    def _cell_coords(self, xy):
        idx = np.floor((xy - self.lo) / self.cell).astype(int)
        return np.clip(idx, 0, self.shape - 1)

    def _flat(self, xy):
        ij = self._cell_coords(xy)
        if self.dim == 1:
            return ij[:, 0]
        return ij[:, 0] * self.shape[1] + ij[:, 1]

    def parity(self, points):
        out = np.zeros(len(points), dtype=bool)
        for sl in _chunks(len(points), 200_000):
            out[sl] = self._parity_chunk(points[sl])
        return out

    def _parity_chunk(self, p):
        xy = p[:, :-1] + self.jitter
        z = p[:, -1]
        lo, hi = self.mesh.bbox
        inbox = np.all((xy >= lo[:-1]) & (xy <= hi[:-1]), axis=1)
        pid = np.flatnonzero(inbox)
        flat = self._flat(xy[pid])
        start = self.cell_start[flat]
        count = self.cell_start[flat + 1] - start
        rep_p = np.repeat(pid, count)
        offs = np.arange(len(rep_p)) - np.repeat(np.cumsum(count) - count, count)
        rep_e = self.cell_elems[np.repeat(start, count) + offs]
        tri = self.tri[rep_e]
        q = xy[rep_p]
        if self.dim == 1:
            x0, x1 = tri[:, 0, 0], tri[:, 1, 0]
            y0, y1 = tri[:, 0, 1], tri[:, 1, 1]
            hit = (np.minimum(x0, x1) <= q[:, 0]) & (q[:, 0] < np.maximum(x0, x1))
            t = (q[:, 0] - x0) / (x1 - x0)
            zc = y0 + t * (y1 - y0)
        else:
            a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
            w0 = _cross2(b[:, :2] - q, c[:, :2] - q)
            w1 = _cross2(c[:, :2] - q, a[:, :2] - q)
            w2 = _cross2(a[:, :2] - q, b[:, :2] - q)
            hit = ((w0 >= 0) & (w1 >= 0) & (w2 >= 0)) | ((w0 <= 0) & (w1 <= 0) & (w2 <= 0))
            tot = w0 + w1 + w2
            with np.errstate(divide="ignore", invalid="ignore"):
                zc = (w0 * a[:, 2] + w1 * b[:, 2] + w2 * c[:, 2]) / tot
        crossing = hit & (zc > z[rep_p])
        counts = np.bincount(rep_p[crossing], minlength=len(p))
        return counts % 2 == 1


def point_diameter(points) -> float:
    """Largest pairwise distance; candidates are restricted to the convex hull."""
    pts = np.asarray(points, dtype=float)
    if len(pts) > pts.shape[1] + 1:
        try:
            pts = pts[ConvexHull(pts).vertices]
        except (QhullError, ValueError):
            pass
    return float(pdist(pts).max()) if len(pts) > 1 else 0.0


def _cross2(u, v):
    return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]


def _chunks(n, size):
    for s in range(0, n, size):
        yield slice(s, min(n, s + size))


def _half_edges(tris):
    return np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])


# ---------------------------------------------------------------------------
# construction and validation
# ---------------------------------------------------------------------------


def build_mesh(
    vertices,
    elements,
    dimension: int | None = None,
    tol_plane: float | None = None,
    max_corner_deg: float = 30.0,
) -> HalfSpaceMesh:
    """Validate raw arrays and return an outward-oriented mesh.

    Vertices within ``tol_plane`` of the hyperplane are snapped onto it; the
    default tolerance is 1e-9 times the bounding-box diagonal.
    """
    v = np.array(vertices, dtype=float)
    e = np.array(elements, dtype=np.int64)
    if v.ndim != 2 or e.ndim != 2:
        raise MeshError("malformed", "vertices and elements must be 2-D arrays")
    if dimension is None:
        dimension = v.shape[1] - 1
    if dimension not in (1, 2) or v.shape[1] != dimension + 1 or e.shape[1] != dimension + 1:
        raise MeshError("malformed", f"dimension {dimension} needs {dimension + 1} coordinates "
                        f"and {dimension + 1} indices per element")
    if len(e) == 0:
        raise MeshError("malformed", "mesh has no elements")
    if e.min() < 0 or e.max() >= len(v):
        raise MeshError("malformed", "element index out of range")
    if not np.all(np.isfinite(v)):
        raise MeshError("malformed", "non-finite vertex coordinates")
    used = np.unique(e)
    if len(used) != len(v):
        remap = np.full(len(v), -1, dtype=np.int64)
        remap[used] = np.arange(len(used))
        v, e = v[used], remap[e]
    diag = float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))
    tol = 1e-9 * diag if tol_plane is None else float(tol_plane)
    z = v[:, -1]
    below = np.flatnonzero(z < -tol)
    if len(below):
        raise MeshError("below-hyperplane", f"vertex {below[0]} at height {z[below[0]]:.6g} is below hyperplane")
    v[np.abs(z) <= tol, -1] = 0.0
    if np.any([len(set(row)) < len(row) for row in e.tolist()]):
        raise MeshError("degenerate", "element with repeated vertex")

    if dimension == 2:
        boundary = _check_surface(e)
    else:
        boundary = _check_polyline(e, len(v))
    on_plane = v[:, -1] == 0.0
    off = boundary[~on_plane[boundary]]
    if len(off):
        raise MeshError("boundary-off-plane", f"boundary loop not on hyperplane at vertex {off[0]}")
    stray = np.setdiff1d(np.flatnonzero(on_plane), boundary)
    if len(stray):
        raise MeshError("interior-on-plane", f"non-boundary vertex {stray[0]} touches the hyperplane")

    mesh = HalfSpaceMesh(dimension, v, e, tol)
    # degenerate relative to the element's own size, so tiny well-shaped parts pass
    pts = v[e]
    longest = np.max(np.linalg.norm(pts - np.roll(pts, 1, axis=1), axis=2), axis=1)
    if np.any(mesh.element_measures <= 1e-12 * longest ** dimension + 1e-300):
        raise MeshError("degenerate", "element with zero measure")
    # orient every component outward: its enclosed volume must be positive
    labels = mesh.component_labels
    elem_label = labels[e[:, 0]]
    flux = mesh.element_centroids[:, -1] * mesh.element_vectors[:, -1]
    comp_vol = np.bincount(elem_label, weights=flux, minlength=mesh.n_components)
    flip = np.flatnonzero(comp_vol < 0)
    if len(flip):
        e = e.copy()
        m = np.isin(elem_label, flip)
        e[m] = e[m][:, ::-1]
        mesh = HalfSpaceMesh(dimension, v, e, tol, tuple(flip.tolist()))
    if dimension == 2 and max_corner_deg is not None:
        _check_corners(mesh, max_corner_deg)
    return mesh


def _check_surface(tris):
    he = _half_edges(tris)
    key = np.sort(he, axis=1)
    uniq, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    if np.any(counts > 2):
        bad = uniq[np.argmax(counts > 2)]
        raise MeshError("non-manifold", f"edge {tuple(bad.tolist())} shared by more than two triangles")
    # a manifold interior edge is traversed once in each direction
    fwd = he[:, 0] < he[:, 1]
    n_fwd = np.bincount(inv, weights=fwd, minlength=len(uniq))
    interior = counts == 2
    if np.any(interior & (n_fwd != 1)):
        bad = uniq[np.argmax(interior & (n_fwd != 1))]
        raise MeshError("orientation", f"inconsistent orientation across edge {tuple(bad.tolist())}")
    bedges = he[counts[inv] == 1]
    if len(bedges):
        out_deg = np.bincount(bedges[:, 0])
        in_deg = np.bincount(bedges[:, 1], minlength=len(out_deg))
        out_deg = np.pad(out_deg, (0, max(0, len(in_deg) - len(out_deg))))
        if np.any(out_deg > 1) or np.any(in_deg > 1) or np.any(out_deg != in_deg):
            raise MeshError("non-manifold", "boundary vertex with more than one boundary loop through it")
    return np.unique(bedges)


def _check_polyline(segs, nv):
    out_deg = np.bincount(segs[:, 0], minlength=nv)
    in_deg = np.bincount(segs[:, 1], minlength=nv)
    if np.any(out_deg + in_deg > 2):
        raise MeshError("non-manifold", f"vertex {int(np.argmax(out_deg + in_deg > 2))} has more than two segments")
    if np.any(out_deg > 1) or np.any(in_deg > 1):
        raise MeshError("orientation", "inconsistent segment orientation")
    return np.flatnonzero(out_deg + in_deg == 1)


def _check_corners(mesh, max_corner_deg):
    v = mesh.vertices
    for loop in mesh.boundary_loops:
        d = np.roll(v[loop, :2], -1, axis=0) - v[loop, :2]
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        cosang = np.einsum("ij,ij->i", d, np.roll(d, 1, axis=0))
        turn = np.degrees(np.arccos(np.clip(cosang, -1.0, 1.0)))
        if np.any(turn > max_corner_deg):
            k = int(np.argmax(turn))
            raise MeshError("corner", f"boundary turns {turn[k]:.1f} deg at vertex {loop[k]} "
                            f"(limit {max_corner_deg} deg)")


# ---------------------------------------------------------------------------
# file formats
# ---------------------------------------------------------------------------


def load_mesh(path, dimension: int | None = None, **kwargs) -> HalfSpaceMesh:
    """Read an ASCII OFF surface (n=2) or an ``x,y,boundary`` CSV polyline (n=1)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeshError("unreadable", f"cannot read {path}: {exc}") from exc
    if dimension is None:
        dimension = 1 if path.suffix.lower() == ".csv" else 2
    try:
        if dimension == 2:
            v, e = _parse_off(text)
        else:
            v, e = _parse_csv(text)
    except MeshError:
        raise
    except (ValueError, IndexError) as exc:
        raise MeshError("unreadable", f"cannot parse {path}: {exc}") from exc
    return build_mesh(v, e, dimension, **kwargs)


def _parse_off(text):
    tokens = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise MeshError("unreadable", "missing OFF header")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4
    verts = np.array(tokens[pos:pos + 3 * nv], dtype=float).reshape(nv, 3)
    pos += 3 * nv
    tris = []
    for _ in range(nf):
        k = int(tokens[pos])
        idx = [int(t) for t in tokens[pos + 1:pos + 1 + k]]
        pos += 1 + k
        if k < 3:
            raise MeshError("unreadable", "face with fewer than three vertices")
        tris.extend([idx[0], idx[i], idx[i + 1]] for i in range(1, k - 1))
    return verts, np.array(tris, dtype=np.int64).reshape(-1, 3)


def _parse_csv(text):
    import csv
    import io

    rows = list(csv.DictReader(io.StringIO(text)))
    if not rows or not {"x", "y", "boundary"} <= set(rows[0]):
        raise MeshError("unreadable", "CSV needs columns x,y,boundary")
    verts = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    flags = np.array([int(r["boundary"]) for r in rows], dtype=bool)
    comps = np.array([int(r.get("component") or 0) for r in rows])
    segs = []
    for c in np.unique(comps):
        idx = np.flatnonzero(comps == c)
        segs.extend(zip(idx[:-1], idx[1:]))
        if not (flags[idx[0]] and flags[idx[-1]]):
            segs.append((idx[-1], idx[0]))
    return verts, np.array(segs, dtype=np.int64).reshape(-1, 2)


def save_mesh(mesh: HalfSpaceMesh, path) -> None:
    """Write OFF (n=2) or CSV (n=1); coordinates round-trip bit-exactly."""
    path = Path(path)
    lines = []
    if mesh.dimension == 2:
        lines.append("OFF")
        lines.append(f"{mesh.n_vertices} {len(mesh.elements)} 0")
        lines.extend(" ".join(repr(float(c)) for c in row) for row in mesh.vertices)
        lines.extend("3 " + " ".join(str(int(i)) for i in row) for row in mesh.elements)
    else:
        bset = mesh._boundary_set
        lines.append("x,y,boundary,component")
        for comp, ch in enumerate(mesh.chains):
            for i in ch:
                x, y = mesh.vertices[i]
                lines.append(f"{float(x)!r},{float(y)!r},{int(i in bset)},{comp}")
    write_text(path, "\n".join(lines) + "\n")


def merge_meshes(meshes) -> HalfSpaceMesh:
    """Disjoint union of meshes of equal dimension (validated again)."""
    meshes = list(meshes)
    offs = np.cumsum([0] + [m.n_vertices for m in meshes[:-1]])
    v = np.concatenate([m.vertices for m in meshes])
    e = np.concatenate([m.elements + o for m, o in zip(meshes, offs)])
    return build_mesh(v, e, meshes[0].dimension, tol_plane=max(m.tol_plane for m in meshes))

