"""Michael-Simon and Topping type inequalities, density and collapsedness functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curvature import CurvatureField
from .gauge import Gauge
from .identities import _element_gradients
from .mesh import HalfSpaceMesh, point_diameter
from .shifted_distance import SurfaceSampling
from .special import ball_volume

C_TOP = 1.0
DELTA_EMP = 0.2  # scripts/calibrate_constants.py: half the exact-cap density floor


@dataclass(frozen=True)
class InequalityRecord:
    name: str
    lhs: float
    rhs: float
    constant: float
    slack: float
    passed: bool
    status: str = "ok"

    @classmethod
    def make(cls, name, lhs, rhs, constant, tol):
        lhs, rhs = float(lhs), float(rhs)
        slack = rhs - lhs
        return cls(name, lhs, rhs, float(constant), slack, bool(slack >= -tol))

    @classmethod
    def not_applicable(cls, name, reason):
        nan = float("nan")
        return cls(name, nan, nan, nan, nan, True, f"not-applicable: {reason}")


def sigma_bar(n: int) -> float:
    """n ((n+2) omega_{n+1} / (2 omega_2))^{1/n}."""
    return n * ((n + 2) * ball_volume(n + 1) / (2 * ball_volume(2))) ** (1.0 / n)


def michael_simon_constant(n: int, theta: float) -> float:
    return (1.0 + 1.0 / math.sin(theta)) / sigma_bar(n)


def _vertex_values(mesh, f):
    fv = np.asarray(f(mesh.vertices) if callable(f) else f, dtype=float)
    if fv.shape != (mesh.n_vertices,):
        raise ValueError("f must have one value per vertex")
    return fv


def michael_simon_check(mesh: HalfSpaceMesh, fld: CurvatureField, g: Gauge, f, tol: float = 1e-9) -> InequalityRecord:
    """||f||_{n/(n-1)} <= sigma(n, theta) (int |grad f| + int f |H|) for positive f (n >= 2)."""
    n = mesh.dimension
    if n < 2:
        return InequalityRecord.not_applicable("michael_simon", "requires n >= 2")
    fv = _vertex_values(mesh, f)
    if np.any(~(fv > 0)):
        raise ValueError("invalid-argument: f must be positive at every vertex")
    w = mesh.vertex_areas * fld.valid
    q = n / (n - 1)
    lhs = float(np.sum(w * fv ** q) ** (1.0 / q))
    grad = _element_gradients(mesh, fv)
    total = float(np.sum(mesh.element_measures * np.linalg.norm(grad, axis=1)))
    total += float(np.sum(w * fv * np.abs(np.nan_to_num(fld.mean_curvature))))
    sig = michael_simon_constant(n, g.theta)
    return InequalityRecord.make("michael_simon", lhs, sig * total, sig, tol * max(lhs, 1.0))


@dataclass(frozen=True)
class ToppingResult:
    record: InequalityRecord
    ratio: float
    per_component: list
    edge_error: float


def topping_check(mesh: HalfSpaceMesh, fld: CurvatureField, c_top: float = C_TOP) -> ToppingResult:
    """d_ext(Sigma_i) <= C_top int_{Sigma_i} |H|^{n-1} on each component; the worst ratio is reported.

    d_ext is taken over vertices, which underestimates by at most the longest edge.
    """
    n = mesh.dimension
    w = mesh.vertex_areas * fld.valid
    Hn = np.abs(np.nan_to_num(fld.mean_curvature)) ** (n - 1)
    labels = mesh.component_labels
    rows = []
    for c in range(mesh.n_components):
        sel = labels == c
        d = point_diameter(mesh.vertices[sel])
        integral = float(np.sum(w[sel] * Hn[sel]))
        rows.append((d, integral, d / integral if integral > 0 else math.inf))
    worst = max(rows, key=lambda r: r[2])
    e = mesh.elements
    edge = float(max(np.linalg.norm(mesh.vertices[e[:, i]] - mesh.vertices[e[:, (i + 1) % e.shape[1]]],
                                    axis=1).max() for i in range(e.shape[1])))
    rec = InequalityRecord.make("topping", worst[0], c_top * worst[1], c_top, 0.0)
    return ToppingResult(rec, worst[2], rows, edge)


# ---------------------------------------------------------------------------
# density, maximal function and collapsedness
# ---------------------------------------------------------------------------


def _ball_sums(points, weights, xs, r_grid, shift=None, chunk=64):
    """sum of weights over points with |p - (x - r shift)| <= r for each x and r.

    Without ``shift`` this is a Euclidean ball about x; with the Wulff shift
    cos(theta) E the ball is the F^o-ball of radius r about x.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    weights = np.atleast_2d(np.asarray(weights, dtype=float).T).T  # (P, k)
    out = np.zeros((len(xs), len(r_grid), weights.shape[1]))
    for s in range(0, len(xs), chunk):
        x = xs[s:s + chunk]
        if shift is None:
            d = np.linalg.norm(points[None, :, :] - x[:, None, :], axis=2)
            idx = np.searchsorted(r_grid, d, side="left")  # first r >= d
            for j in range(len(x)):
                binned = np.stack([np.bincount(idx[j], weights=weights[:, k], minlength=len(r_grid) + 1)
                                   for k in range(weights.shape[1])], axis=1)
                out[s + j] = np.cumsum(binned, axis=0)[:len(r_grid)]
        else:
            for i, r in enumerate(r_grid):
                c = x - r * shift
                d = np.linalg.norm(points[None, :, :] - c[:, None, :], axis=2)
                out[s:s + len(x), i] = (d <= r).astype(float) @ weights
    return out


@dataclass(frozen=True)
class DensityProfile:
    x: np.ndarray
    r: np.ndarray
    v_wulff: np.ndarray
    v_euclid: np.ndarray
    kappa: np.ndarray  # kappa(x, R) for R in r
    maximal: np.ndarray  # M(x, R) for R in r; NaN when n = 1

    def csv_rows(self, x_id):
        n = len(self.x) - 1
        return [(x_id, float(r), float(vw / r ** n), float(ve / r ** n))
                for r, vw, ve in zip(self.r, self.v_wulff, self.v_euclid)]


def _profile_terms(v_euclid, h_int, r, n, resolved=None):
    """kappa and M along the r axis; radii outside ``resolved`` are skipped."""
    ratio = v_euclid / r ** n
    if resolved is not None:
        ratio = np.where(resolved, ratio, np.inf)
    kappa = np.minimum.accumulate(ratio, axis=-1)
    if n < 2:
        return kappa, np.full_like(kappa, np.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        term = (1.0 / n) * r ** (-1.0 / (n - 1)) * np.where(v_euclid > 0, v_euclid, np.nan) ** (
            -(n - 2) / (n - 1)) * h_int
    term = np.nan_to_num(term, nan=0.0)
    if resolved is not None:
        term = np.where(resolved, term, 0.0)
    return kappa, np.maximum.accumulate(term, axis=-1)


def density_profile(mesh: HalfSpaceMesh, sampling: SurfaceSampling, g: Gauge, x, r_max: float,
                    fld: CurvatureField, n_r: int = 40, r_min: float | None = None) -> DensityProfile:
    """V(x, r) over Wulff and Euclidean balls with kappa(x, R) and M(x, R) along the same grid.

    Surface integrals use the weighted sampling; r starts at a few sample
    spacings so the smallest balls still hold many samples.
    """
    n = mesh.dimension
    x = np.asarray(x, dtype=float)
    if r_min is None:
        r_min = min(4.0 * sampling.h_euclid, 0.5 * r_max)
    r = np.linspace(r_min, r_max, n_r)
    absH = np.abs(np.nan_to_num(sampling.interpolate(mesh, fld.mean_curvature)))
    wts = np.column_stack([sampling.weights, sampling.weights * absH])
    e = np.zeros(n + 1)
    e[-1] = g.cos_theta
    ve = _ball_sums(sampling.points, wts, x[None], r)[0]
    vw = _ball_sums(sampling.points, sampling.weights, x[None], r, shift=e)[0, :, 0]
    kappa, M = _profile_terms(ve[:, 0], ve[:, 1], r, n)
    return DensityProfile(x, r, vw, ve[:, 0], kappa, M)


def density_floor(mesh: HalfSpaceMesh, g: Gauge, lam: float, n_r: int = 12, vertices=None) -> float:
    """min over vertices x and r <= 0.3/lam of V_Wulff(x, r)/r^n with vertex-lumped weights.

    r starts at three longest edges so balls contain whole vertex stars.
    """
    n = mesh.dimension
    v = mesh.vertices
    e = mesh.elements
    edge = max(np.linalg.norm(v[e[:, i]] - v[e[:, (i + 1) % e.shape[1]]], axis=1).max() for i in range(e.shape[1]))
    r_hi = 0.3 / lam
    r_lo = min(3.0 * edge, 0.5 * r_hi)
    r = np.linspace(r_lo, r_hi, n_r)
    xs = v if vertices is None else v[vertices]
    shift = np.zeros(n + 1)
    shift[-1] = g.cos_theta
    V = _ball_sums(v, mesh.vertex_areas, xs, r, shift=shift)[:, :, 0]
    return float(np.min(V / r ** n))


@dataclass(frozen=True)
class DichotomyResult:
    passed: bool
    delta: float
    radii: np.ndarray
    n_points: int
    failures: int
    worst_margin: float
    status: str = "ok"


def _component_edges(mesh: HalfSpaceMesh) -> np.ndarray:
    """Longest edge of each vertex's component."""
    v, e = mesh.vertices, mesh.elements
    k = e.shape[1]
    lengths = np.max(np.stack([np.linalg.norm(v[e[:, i]] - v[e[:, (i + 1) % k]], axis=1) for i in range(k)]), axis=0)
    labels = mesh.component_labels
    per = np.zeros(mesh.n_components)
    np.maximum.at(per, labels[e[:, 0]], lengths)
    return per[labels]


def dichotomy_check(mesh: HalfSpaceMesh, fld: CurvatureField, delta: float, radius_factors=(1.0001, 1.5, 2.0, 4.0),
                    n_r: int = 64) -> DichotomyResult:
    """At every vertex x and every R with |Sigma| < delta R^n: M(x, R) > delta or kappa(x, R) > delta.

    Euclidean-ball integrals use vertex-lumped weights on a log-spaced r-grid
    up to R.  At each vertex only radii of at least three longest edges of its
    component enter; below that the lumped weights do not resolve the surface,
    and a smooth surface has V / r^n near omega_n there anyway.
    """
    n = mesh.dimension
    if n < 2:
        return DichotomyResult(True, delta, np.zeros(0), 0, 0, float("nan"), "not-applicable: requires n >= 2")
    v = mesh.vertices
    r_lo = 3.0 * _component_edges(mesh)
    R0 = (mesh.area / delta) ** (1.0 / n)
    radii = R0 * np.asarray(radius_factors, dtype=float)
    r = np.unique(np.concatenate([np.geomspace(r_lo.min(), radii.max(), n_r), radii]))
    absH = np.abs(np.nan_to_num(fld.mean_curvature))
    w = mesh.vertex_areas * fld.valid
    sums = _ball_sums(v, np.column_stack([w, w * absH]), v, r)
    resolved = r[None, :] >= r_lo[:, None]
    kappa, M = _profile_terms(sums[:, :, 0], sums[:, :, 1], r[None, :], n, resolved)
    at = np.searchsorted(r, radii)
    best = np.maximum(kappa[:, at], M[:, at])
    fail = int(np.count_nonzero(best <= delta))
    return DichotomyResult(fail == 0, float(delta), radii, int(len(v)), fail, float(np.min(best - delta)))
