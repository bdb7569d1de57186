"""Integral identities, the Heintze-Karcher inequality and the Montiel-Ros slab.

Surface integrals use vertex-lumped quadrature (each vertex carries a third of
its triangles' area, or half of its segments' length) so they sample the same
points as the curvature estimator.  Terms that involve a tangential gradient
of a piecewise-linear function are integrated per element.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .curvature import CurvatureField
from .gauge import Gauge
from .mesh import HalfSpaceMesh

FLOOR = 1e-14
H_MIN = 1e-6

# Gauss-Legendre nodes on [0, 1] for edge integrals
_GL_T = 0.5 * (1.0 + np.array([-math.sqrt(3 / 5), 0.0, math.sqrt(3 / 5)]))
_GL_W = 0.5 * np.array([5 / 9, 8 / 9, 5 / 9])


@dataclass(frozen=True)
class IdentityResidual:
    name: str
    lhs: float
    rhs: float
    absolute: float
    relative: float
    scheme: str

    @classmethod
    def from_sides(cls, name: str, lhs: float, rhs: float, scheme: str) -> "IdentityResidual":
        lhs, rhs = float(lhs), float(rhs)
        a = abs(lhs - rhs)
        return cls(name, lhs, rhs, a, a / max(abs(lhs), abs(rhs), FLOOR), scheme)


def _weights(mesh: HalfSpaceMesh, fld: CurvatureField) -> np.ndarray:
    w = mesh.vertex_areas.copy()
    w[~fld.valid] = 0.0
    return w


def _check_field(mesh: HalfSpaceMesh, fld: CurvatureField) -> None:
    if len(mesh.elements) == 0 or mesh.area <= 0:
        raise ValueError("empty surface")
    if len(fld.mean_curvature) != mesh.n_vertices:
        raise ValueError("curvature field does not match mesh")


# ---------------------------------------------------------------------------
# vector fields for the first variation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VectorField:
    """A smooth vector field X with its Jacobian; ``value`` and ``jacobian`` act on (m, d) arrays."""

    name: str
    value: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    divergence: Callable[[np.ndarray], np.ndarray]


def position_field(dimension: int = 2) -> VectorField:
    d = dimension + 1
    return VectorField(
        "position",
        lambda x: np.asarray(x, dtype=float).copy(),
        lambda x: np.broadcast_to(np.eye(d), (len(x), d, d)).copy(),
        lambda x: np.full(len(x), float(d)),
    )


def radial_field(center, scale: float = 1.0) -> VectorField:
    """X(x) = f(|x - x_r|)(x - x_r) with f(s) = exp(-s^2 / scale^2) and x_r on the hyperplane."""
    xr = np.asarray(center, dtype=float)
    if abs(xr[-1]) > 0:
        raise ValueError("radial field center must lie on the hyperplane")
    d = len(xr)
    s2 = scale * scale

    def parts(x):
        w = np.asarray(x, dtype=float) - xr
        r2 = np.einsum("ij,ij->i", w, w)
        f = np.exp(-r2 / s2)
        # f'(s)/s
        fp_over_s = -2.0 / s2 * f
        return w, r2, f, fp_over_s

    def value(x):
        w, _, f, _ = parts(x)
        return f[:, None] * w

    def jac(x):
        w, _, f, fs = parts(x)
        return f[:, None, None] * np.eye(d)[None] + fs[:, None, None] * w[:, :, None] * w[:, None, :]

    def div(x):
        _, r2, f, fs = parts(x)
        return d * f + fs * r2

    return VectorField(f"radial(scale={scale})", value, jac, div)


def _check_tangency(mesh: HalfSpaceMesh, X: VectorField, tol: float = 1e-9) -> None:
    bv = mesh.boundary_vertices
    if len(bv) == 0:
        return
    xb = X.value(mesh.vertices[bv])
    scale = max(1.0, float(np.max(np.abs(xb))))
    if np.max(np.abs(xb[:, -1])) > tol * scale:
        raise ValueError("vector field is not tangent to the hyperplane on the boundary")


# ---------------------------------------------------------------------------
# boundary quadrature
# ---------------------------------------------------------------------------


def _boundary_quadrature(mesh: HalfSpaceMesh):
    """Points, weights and outward conormals of T along Gamma.

    n = 2 uses three-point Gauss rules on boundary edges; n = 1 uses the
    contact points with unit weight.
    """
    v = mesh.vertices
    if mesh.dimension == 1:
        bv = mesh.boundary_vertices
        heads = {int(ch[0]) for ch in mesh.chains if len(ch) > 1}
        conormal = np.array([[1.0, 0.0] if int(i) in heads else [-1.0, 0.0] for i in bv]).reshape(-1, 2)
        return v[bv], np.ones(len(bv)), conormal
    be = mesh.boundary_edges
    a, b = v[be[:, 0]], v[be[:, 1]]
    t = b - a
    length = np.linalg.norm(t, axis=1)
    # loops run counter-clockwise around T, so the outward side is on the right
    cn = np.column_stack([t[:, 1], -t[:, 0], np.zeros(len(t))]) / np.where(length > 0, length, 1.0)[:, None]
    pts = (a[:, None, :] + _GL_T[None, :, None] * t[:, None, :]).reshape(-1, 3)
    wts = (length[:, None] * _GL_W[None, :]).ravel()
    return pts, wts, np.repeat(cn, len(_GL_T), axis=0)


def _boundary_integral(mesh: HalfSpaceMesh, f_vertex: np.ndarray) -> float:
    """Integral over Gamma of the piecewise-linear interpolant of vertex values."""
    if mesh.dimension == 1:
        return float(np.sum(f_vertex[mesh.boundary_vertices]))
    be = mesh.boundary_edges
    length = np.linalg.norm(mesh.vertices[be[:, 1]] - mesh.vertices[be[:, 0]], axis=1)
    return float(np.sum(0.5 * length * (f_vertex[be[:, 0]] + f_vertex[be[:, 1]])))


def _element_gradients(mesh: HalfSpaceMesh, f_vertex: np.ndarray) -> np.ndarray:
    """Tangential gradient of the piecewise-linear interpolant on each element."""
    v = mesh.vertices
    e = mesh.elements
    if mesh.dimension == 1:
        t = v[e[:, 1]] - v[e[:, 0]]
        l2 = np.einsum("ij,ij->i", t, t)
        return ((f_vertex[e[:, 1]] - f_vertex[e[:, 0]]) / l2)[:, None] * t
    p0, p1, p2 = v[e[:, 0]], v[e[:, 1]], v[e[:, 2]]
    nrm = np.cross(p1 - p0, p2 - p0)
    a2 = np.einsum("ij,ij->i", nrm, nrm)
    grad = (
        f_vertex[e[:, 0], None] * np.cross(nrm, p2 - p1)
        + f_vertex[e[:, 1], None] * np.cross(nrm, p0 - p2)
        + f_vertex[e[:, 2], None] * np.cross(nrm, p1 - p0)
    )
    return grad / a2[:, None]


# ---------------------------------------------------------------------------
# identities
# ---------------------------------------------------------------------------


def minkowski_residual(mesh: HalfSpaceMesh, fld: CurvatureField, g: Gauge) -> IdentityResidual:
    """int <x, H nu> against int n (1 - cos(theta) <nu, E>)."""
    _check_field(mesh, fld)
    w = _weights(mesh, fld)
    nu = np.nan_to_num(fld.normals)
    H = np.nan_to_num(fld.mean_curvature)
    lhs = np.sum(w * H * np.einsum("ij,ij->i", mesh.vertices, nu))
    rhs = np.sum(w * mesh.dimension * g.value(nu))
    return IdentityResidual.from_sides("minkowski", lhs, rhs, "vertex-lumped")


def capillary_divergence_residual(mesh: HalfSpaceMesh, fld: CurvatureField, g: Gauge, f) -> IdentityResidual:
    """-sin(theta) int_Gamma f against int <grad f, E> - int H f <nu, E>.

    ``f`` is a per-vertex array or a callable on vertex positions.
    """
    _check_field(mesh, fld)
    fv = np.asarray(f(mesh.vertices) if callable(f) else f, dtype=float)
    if fv.shape != (mesh.n_vertices,):
        raise ValueError("f must have one value per vertex")
    w = _weights(mesh, fld)
    lhs = -math.sin(g.theta) * _boundary_integral(mesh, fv)
    grad = _element_gradients(mesh, fv)
    term1 = np.sum(mesh.element_measures * grad[:, -1])
    nu_z = np.nan_to_num(fld.normals[:, -1])
    term2 = np.sum(w * np.nan_to_num(fld.mean_curvature) * fv * nu_z)
    return IdentityResidual.from_sides("capillary_divergence", lhs, term1 - term2, "element-gradient+vertex-lumped")


def wetted_area_residual(mesh: HalfSpaceMesh, fld: CurvatureField) -> IdentityResidual:
    """int <nu, E> against |T|."""
    _check_field(mesh, fld)
    lhs = np.sum(_weights(mesh, fld) * np.nan_to_num(fld.normals[:, -1]))
    return IdentityResidual.from_sides("wetted_area", lhs, mesh.wetted_area, "vertex-lumped")


def first_variation_residual(mesh: HalfSpaceMesh, fld: CurvatureField, g: Gauge, X: VectorField | None = None,
                             lam: float | None = None) -> tuple[IdentityResidual, IdentityResidual]:
    """Capillary and anisotropic first-variation identities for a field X tangent on the hyperplane.

    First: int div_Sigma X - cos(theta) int_T div X = int H <X, nu>.
    Second: lam int_Omega div X = int F(nu) div_F X + int (lam - H) <X, nu>,
    with div_F X = div X - <grad F(nu), (grad X)^T nu> / F(nu).
    The volume integral is evaluated as the flux of X through Sigma, and the
    wetted-region integral as the flux through Gamma.
    """
    _check_field(mesh, fld)
    if X is None:
        X = position_field(mesh.dimension)
    _check_tangency(mesh, X)
    if lam is None:
        lam = float(np.sum(_weights(mesh, fld) * np.nan_to_num(fld.mean_curvature)) / mesh.area)
    x = mesh.vertices
    w = _weights(mesh, fld)
    nu = np.nan_to_num(fld.normals)
    H = np.nan_to_num(fld.mean_curvature)
    J = X.jacobian(x)
    Jnu = np.einsum("ijk,ik->ij", J, nu)  # (grad X) nu
    JTnu = np.einsum("ikj,ik->ij", J, nu)  # (grad X)^T nu
    div = X.divergence(x)
    div_sigma = div - np.einsum("ij,ij->i", nu, Jnu)
    Xnu = np.einsum("ij,ij->i", X.value(x), nu)

    c = g.cos_theta
    bp, bw, bcn = _boundary_quadrature(mesh)
    flux_T = float(np.sum(bw * np.einsum("ij,ij->i", X.value(bp), bcn))) if len(bp) else 0.0
    first = IdentityResidual.from_sides(
        f"first_variation[{X.name}]",
        np.sum(w * div_sigma) - c * flux_T,
        np.sum(w * H * Xnu),
        "vertex-lumped+boundary-flux",
    )

    Fnu = g.value(nu)
    grad_f = nu.copy()
    grad_f[:, -1] -= c
    div_f = div - np.einsum("ij,ij->i", grad_f, JTnu) / np.where(Fnu > 0, Fnu, 1.0)
    flux_sigma = _surface_flux(mesh, X)
    second = IdentityResidual.from_sides(
        f"anisotropic_first_variation[{X.name}]",
        lam * flux_sigma,
        np.sum(w * Fnu * div_f) + np.sum(w * (lam - H) * Xnu),
        "element-flux+vertex-lumped",
    )
    return first, second


def _surface_flux(mesh: HalfSpaceMesh, X: VectorField) -> float:
    """int_Sigma <X, nu> with exact element normals; X is tangent on T so this equals int_Omega div X."""
    v = mesh.vertices
    e = mesh.elements
    vec = mesh.element_vectors  # measure times unit normal
    if mesh.dimension == 1:
        a, b = v[e[:, 0]], v[e[:, 1]]
        pts = a[:, None, :] + _GL_T[None, :, None] * (b - a)[:, None, :]
        vals = X.value(pts.reshape(-1, 2)).reshape(len(e), len(_GL_T), 2)
        return float(np.einsum("k,ikj,ij->", _GL_W, vals, vec))
    # degree-2 rule on triangles (edge midpoints)
    p = v[e]
    mids = 0.5 * np.stack([p[:, 0] + p[:, 1], p[:, 1] + p[:, 2], p[:, 2] + p[:, 0]], axis=1)
    vals = X.value(mids.reshape(-1, 3)).reshape(len(e), 3, 3).mean(axis=1)
    return float(np.einsum("ij,ij->", vals, vec))


# ---------------------------------------------------------------------------
# Heintze-Karcher and Montiel-Ros
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeintzeKarcher:
    applicable: bool
    deficit: float
    relative: float
    volume: float
    bound: float
    offending: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))


def _mean_convex(fld: CurvatureField, h_min: float) -> np.ndarray:
    H = fld.mean_curvature
    return np.flatnonzero(~(np.isfinite(H) & (H > h_min)))


def heintze_karcher_deficit(mesh: HalfSpaceMesh, fld: CurvatureField, g: Gauge,
                            h_min: float = H_MIN) -> HeintzeKarcher:
    """(n/(n+1)) int F(nu)/H - |Omega|; not applicable unless H > h_min at every vertex."""
    _check_field(mesh, fld)
    bad = _mean_convex(fld, h_min)
    vol = mesh.volume
    if len(bad):
        return HeintzeKarcher(False, float("nan"), float("nan"), vol, float("nan"), bad)
    n = mesh.dimension
    bound = n / (n + 1) * float(np.sum(mesh.vertex_areas * g.value(fld.normals) / fld.mean_curvature))
    d = bound - vol
    return HeintzeKarcher(True, d, d / max(abs(vol), FLOOR), vol, bound)


@dataclass(frozen=True)
class MontielRos:
    slab: float
    volume: float
    bound: float
    slack_volume_slab: float
    slack_slab_bound: float
    monotone: bool
    flagged: np.ndarray
    t_max: float


def _slab_columns(kappa: np.ndarray, t_end: np.ndarray) -> np.ndarray:
    """int_0^t_end prod_i (1 - t kappa_i) dt, integrated exactly as a polynomial in t."""
    m, n = kappa.shape
    # coefficients of prod (1 - t k_i) in increasing powers of t
    coef = np.zeros((m, n + 1))
    coef[:, 0] = 1.0
    for i in range(n):
        shifted = np.zeros_like(coef)
        shifted[:, 1:] = coef[:, :-1]
        coef = coef - kappa[:, i, None] * shifted
    powers = np.arange(1, n + 2)
    return np.sum(coef / powers * t_end[:, None] ** powers, axis=1)


def montiel_ros_integral(mesh: HalfSpaceMesh, fld: CurvatureField, g: Gauge, t_max: float | None = None,
                         tol: float = 0.01, h_min: float = H_MIN) -> MontielRos:
    """int F(nu) int_0^{1/kappa_n} prod (1 - t kappa_i) dt and the chain |Omega| <= slab <= HK bound.

    Columns where the largest principal curvature is not positive run to
    ``t_max`` (default 3 diameter / (1 - |cos theta|)) and are flagged.
    ``monotone`` holds when each link is satisfied up to ``tol`` relative to
    |Omega|; the second link is only checked on mean-convex meshes.
    """
    _check_field(mesh, fld)
    if t_max is None:
        t_max = 3.0 * mesh.diameter / (1.0 - abs(g.cos_theta))
    kappa = np.nan_to_num(fld.principal)
    kmax = kappa.max(axis=1)
    flagged = np.flatnonzero(~(kmax > 0))
    t_end = np.where(kmax > 0, 1.0 / np.where(kmax > 0, kmax, 1.0), t_max)
    cols = _slab_columns(kappa, t_end)
    w = _weights(mesh, fld)
    slab = float(np.sum(w * g.value(np.nan_to_num(fld.normals)) * cols))
    hk = heintze_karcher_deficit(mesh, fld, g, h_min)
    vol = mesh.volume
    s1 = slab - vol
    s2 = hk.bound - slab if hk.applicable else float("nan")
    scale = max(abs(vol), FLOOR)
    mono = s1 >= -tol * scale and (not hk.applicable or s2 >= -tol * scale)
    return MontielRos(slab, vol, hk.bound, s1, s2, bool(mono), flagged, float(t_max))


def isotropic_ratio_gap(fld: CurvatureField, g: Gauge) -> float:
    """max |F(nu)/H - (1 - cos(theta) nu_z)/H| over mean-convex vertices."""
    H = fld.mean_curvature
    ok = np.isfinite(H) & (np.abs(H) > 0)
    a = g.value(fld.normals[ok]) / H[ok]
    b = (1.0 - g.cos_theta * fld.normals[ok, -1]) / H[ok]
    return float(np.max(np.abs(a - b))) if np.any(ok) else 0.0


def verify_identities(mesh: HalfSpaceMesh, fld: CurvatureField, g: Gauge,
                      lam: float | None = None) -> list[IdentityResidual]:
    """The standard battery: Minkowski, capillary divergence with f = 1 and f = 1 + x_{n+1},
    wetted area, and both first-variation identities for the position field."""
    out = [
        minkowski_residual(mesh, fld, g),
        _renamed(capillary_divergence_residual(mesh, fld, g, np.ones(mesh.n_vertices)), "capillary_divergence[f=1]"),
        _renamed(capillary_divergence_residual(mesh, fld, g, 1.0 + mesh.vertices[:, -1]),
                 "capillary_divergence[f=1+x_n+1]"),
        wetted_area_residual(mesh, fld),
    ]
    out.extend(first_variation_residual(mesh, fld, g, position_field(mesh.dimension), lam))
    return out


def _renamed(r: IdentityResidual, name: str) -> IdentityResidual:
    return IdentityResidual(name, r.lhs, r.rhs, r.absolute, r.relative, r.scheme)
