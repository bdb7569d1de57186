"""Quantities of the enclosed region: volumes, perimeters, diameters, d_m, r_beta."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distance import MeshDistance
from .gauge import Gauge
from .mesh import HalfSpaceMesh, MeshError, point_diameter
from .special import ball_volume


@dataclass(frozen=True)
class RegionQuantities:
    volume: float
    wetted_area: float
    area: float
    perimeter: float
    anisotropic_perimeter: float
    boundary_measure: float
    d_ext: float
    d_m: float
    d_m_error: float
    r_beta: float
    r_beta_raw: float
    r_beta_lower: float
    r_beta_upper: float
    beta0: float


def anisotropic_perimeter(mesh: HalfSpaceMesh, g: Gauge) -> float:
    """Integral of F(nu) over Sigma; exact for the piecewise-linear surface."""
    return float(np.sum(mesh.element_measures * g.value(mesh.element_normals)))


def extrinsic_diameter(mesh: HalfSpaceMesh) -> float:
    """Largest distance between two vertices."""
    return point_diameter(mesh.vertices)


def _plane_grid(lo, hi, k):
    axes = [np.linspace(lo[i], hi[i], k) for i in range(len(lo))]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(lo))


def non_collapsedness(mesh: HalfSpaceMesh, per_axis: int = 60, refine: int = 3):
    """d_m = max over x in T of dist(x, Sigma), with the location and a grid error bar.

    The distance is 1-Lipschitz, so the true maximum exceeds the best grid
    value by at most half a diagonal of the final search cell.
    """
    bv = mesh.boundary_vertices
    if len(bv) == 0:
        return 0.0, 0.0, None
    dist = MeshDistance(mesh, Gauge(math.pi / 2, mesh.dimension))
    plane = mesh.vertices[bv, :-1]
    lo, hi = plane.min(axis=0), plane.max(axis=0)
    xy = _plane_grid(lo, hi, per_axis)
    xy = xy[mesh.in_wetted_region(xy)]
    if len(xy) == 0:
        return 0.0, float(np.linalg.norm(hi - lo)), None
    pts = np.column_stack([xy, np.zeros(len(xy))])
    d = dist.value(pts)
    best = int(np.argmax(d))
    cell = (hi - lo) / (per_axis - 1)
    x0, dm = xy[best], float(d[best])
    for _ in range(refine):
        local = _plane_grid(x0 - cell, x0 + cell, 11)
        local = local[mesh.in_wetted_region(local)]
        if len(local):
            dl = dist.value(np.column_stack([local, np.zeros(len(local))]))
            k = int(np.argmax(dl))
            if dl[k] > dm:
                x0, dm = local[k], float(dl[k])
        cell = cell / 5.0
    err = 0.5 * float(np.linalg.norm(cell * 5.0))
    return dm, err, np.append(x0, 0.0)


def isoperimetric_radius(mesh: HalfSpaceMesh, beta0: float, centers, n_samples: int = 20000,
                         seed: int = 0) -> float:
    """Monte-Carlo estimate of sup{r : |B_r(x) n Omega| >= beta0 |B_r^+(x)|} over plane points x.

    The same half-ball sample is rescaled to every center.  For a fixed x the
    local volume is a step function of r, so the supremum is read off the
    sorted distances of the accepted samples instead of bisecting.
    """
    n = mesh.dimension
    upper = (2 * mesh.volume / (ball_volume(n + 1) * beta0)) ** (1.0 / (n + 1))
    r_max = 1.05 * upper
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(n_samples, n + 1))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs[:, -1] = np.abs(dirs[:, -1])
    rad = rng.uniform(size=n_samples) ** (1.0 / (n + 1))
    unit = dirs * rad[:, None]
    best = 0.0
    ks = np.arange(1, n_samples + 1)
    for x in np.atleast_2d(centers):
        inside = mesh.contains(x + r_max * unit, z_tol=mesh.tol_plane)
        d = np.sort(r_max * rad[inside])
        if len(d) == 0:
            continue
        m = len(d)
        # for r in (d_k, d_{k+1}] the volume fraction is k / N
        rho = r_max * (ks[:m] / (n_samples * beta0)) ** (1.0 / (n + 1))
        nxt = np.append(d[1:], r_max)
        ok = rho > d
        if np.any(ok):
            best = max(best, float(np.max(np.minimum(nxt[ok], rho[ok]))))
    return best


def region_quantities(mesh: HalfSpaceMesh, g: Gauge, beta0: float = 0.25, n_samples: int = 20000,
                      seed: int = 0, centers_per_axis: int = 7) -> RegionQuantities:
    if not (0.0 < beta0 < 1.0):
        raise ValueError("beta0 must lie in (0, 1)")
    if mesh.dimension == 2:
        for loop in mesh.boundary_loops:
            if len(loop) < 3:
                raise MeshError("open-boundary", "boundary loop with fewer than three vertices")
    n = mesh.dimension
    area = mesh.area
    wet = mesh.wetted_area
    d_m, d_err, x_m = non_collapsedness(mesh)
    upper = (2 * mesh.volume / (ball_volume(n + 1) * beta0)) ** (1.0 / (n + 1))
    lo, hi = mesh.bbox
    centers = _plane_grid(lo[:-1], hi[:-1], centers_per_axis)
    centers = np.column_stack([centers, np.zeros(len(centers))])
    if x_m is not None:
        centers = np.vstack([x_m, centers])
    raw = isoperimetric_radius(mesh, beta0, centers, n_samples, seed)
    # both ends of the bracket are proven, so Monte-Carlo overshoot is clipped
    r_beta = min(max(raw, d_m), upper)
    return RegionQuantities(
        volume=mesh.volume,
        wetted_area=wet,
        area=area,
        perimeter=area + wet,
        anisotropic_perimeter=anisotropic_perimeter(mesh, g),
        boundary_measure=mesh.boundary_measure,
        d_ext=extrinsic_diameter(mesh),
        d_m=d_m,
        d_m_error=d_err,
        r_beta=r_beta,
        r_beta_raw=raw,
        r_beta_lower=d_m,
        r_beta_upper=upper,
        beta0=beta0,
    )
