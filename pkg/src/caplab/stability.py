"""Closeness of almost-CMC capillary surfaces to unions of caps, as an executable pipeline.

deficit -> super-level set Omega_{r0} -> clusters -> deepest points o_i ->
height classes and separations -> Hausdorff distance to the union of caps.

Centers are Wulff centers: the cap or sphere attached to o is the boundary of
B_R(o - R cos(theta) E) clipped to the closed half-space, so a boundary cap
has its center on the hyperplane and u(o) = R for an exact configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.optimize import minimize, minimize_scalar

from .curvature import CurvatureField, estimate_curvature
from .gauge import Gauge
from .mesh import HalfSpaceMesh
from .shifted_distance import (SurfaceSampling, build_sampling, certified_box, in_superlevel, run_chunks,
                               shifted_dist)

C_FIT = 1.1e-3  # scripts/calibrate_constants.py: twice the exact-corpus need at resolution 4
MAX_CLUSTER_POINTS = 3000


@dataclass(frozen=True)
class StabilityConfig:
    lam: float | None = None
    budget: int = 200_000
    seed: int = 0
    c_fit: float = C_FIT
    admission: float = 0.5
    delta_regime: float = 0.1
    gamma: float | None = None
    gap_ratio: float = 3.0
    p_norms: tuple = (1.0,)
    hausdorff_samples: int = 20_000
    h_target: float | None = None
    r0: float | None = None
    force: bool = False
    workers: int | None = None


# ---------------------------------------------------------------------------
# deficit
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeficitSummary:
    lam: float
    R: float
    epsilon: float
    r0: float
    lp_norms: dict
    fitted: bool
    window: tuple
    in_window: bool
    admitted: bool
    proven_regime: bool
    dimension: int

    @property
    def rate(self) -> float:
        """epsilon^{1/(n+2)^2}, the Hausdorff rate."""
        return self.epsilon ** (1.0 / (self.dimension + 2) ** 2)


def _lp(w, dev, p):
    return float(np.sum(w * np.abs(dev) ** p) ** (1.0 / p))


def deficit(mesh: HalfSpaceMesh, fld: CurvatureField, g: Gauge, lam: float | None = None,
            p_norms=(1.0,), admission: float = 0.5, delta_regime: float = 0.1) -> DeficitSummary:
    """epsilon = ||H - lam||_{L^n}, with lam fitted by bounded 1-D minimization when absent.

    The a-priori window comes from the anisotropic first variation with the
    position field about a point x_r of the hyperplane,
    lam (n+1)|Omega| = n int F(nu) + int (lam - H)<x - x_r, nu>,
    which pins lam to n int F(nu) / ((n+1)|Omega|) up to
    max|x - x_r| ||H - lam||_{L^1} / ((n+1)|Omega|).
    """
    n = mesh.dimension
    w = mesh.vertex_areas * fld.valid
    H = np.where(fld.valid, fld.mean_curvature, 0.0)
    fitted = lam is None
    if fitted:
        lo, hi = float(np.min(H[fld.valid])), float(np.max(H[fld.valid]))
        if hi - lo < 1e-12:
            lam = 0.5 * (lo + hi)
        else:
            res = minimize_scalar(lambda t: np.sum(w * np.abs(H - t) ** n), bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12 * max(1.0, abs(hi))})
            lam = float(res.x)
    lam = float(lam)
    if lam <= 0:
        raise ValueError("lambda must be positive")
    dev = H - lam
    eps = _lp(w, dev, n)
    norms = {float(p): _lp(w, dev, p) for p in p_norms}
    R = n / lam
    r0 = R - eps ** (1.0 / (n + 2))

    nu = np.nan_to_num(fld.normals)
    vol = max(mesh.volume, 1e-300)
    center = mesh.vertices.mean(axis=0)
    center[-1] = 0.0
    reach = float(np.max(np.linalg.norm(mesh.vertices - center, axis=1)))
    mid = n * float(np.sum(w * g.value(nu))) / ((n + 1) * vol)
    half = reach * _lp(w, dev, 1.0) / ((n + 1) * vol)
    window = (mid - half, mid + half)
    tol = 1e-2 * abs(mid)  # quadrature allowance
    return DeficitSummary(lam, R, eps, r0, norms, fitted, window,
                          bool(window[0] - tol <= lam <= window[1] + tol),
                          bool(eps <= admission), bool(eps <= delta_regime), n)


# ---------------------------------------------------------------------------
# clusters
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Cluster:
    center: np.ndarray
    depth: float
    n_samples: int
    height_class: str = "unclassified"
    margin: float = float("nan")


@dataclass(frozen=True)
class CapConfiguration:
    clusters: tuple
    R: float
    r0: float
    gamma: float
    status: str = "ok"
    n_hits: int = 0

    @property
    def centers(self) -> np.ndarray:
        if not self.clusters:
            return np.zeros((0, 0))
        return np.array([c.center for c in self.clusters])

    @property
    def N(self) -> int:
        return len(self.clusters)


def _gap_threshold(heights: np.ndarray, ratio: float) -> float:
    """Cut at the largest multiplicative jump in sorted merge heights; inf if no jump exceeds ``ratio``."""
    if len(heights) < 2:
        return math.inf
    h = np.sort(heights)
    h = np.maximum(h, 1e-300)
    jumps = h[1:] / h[:-1]
    k = int(np.argmax(jumps))
    if jumps[k] < ratio:
        return math.inf
    return float(math.sqrt(h[k] * h[k + 1]))


def _deepest(sampling: SurfaceSampling, g: Gauge, pts: np.ndarray) -> tuple[np.ndarray, float]:
    """Maximize u over the closed half-space starting from the deepest sample."""
    u = shifted_dist(pts, sampling, g)
    start = pts[int(np.argmax(u))]

    def neg(y):
        q = np.array(y, dtype=float)
        q[-1] = max(q[-1], 0.0)
        return -float(shifted_dist(q[None], sampling, g)[0])

    scale = max(float(np.ptp(pts, axis=0).max()), 1e-3)
    simplex = np.vstack([start] + [start + 0.25 * scale * e for e in np.eye(len(start))])
    res = minimize(neg, start, method="Nelder-Mead",
                   options={"initial_simplex": simplex, "xatol": 1e-7 * scale, "fatol": 1e-10, "maxiter": 4000})
    best = np.array(res.x)
    best[-1] = max(best[-1], 0.0)
    depth = -neg(best)
    if depth < float(u.max()):
        return start, float(u.max())
    return best, depth


def extract_clusters(mesh: HalfSpaceMesh, sampling: SurfaceSampling, g: Gauge, summary: DeficitSummary,
                     budget: int = 200_000, seed: int = 0, gamma: float | None = None, gap_ratio: float = 3.0,
                     r0: float | None = None, force: bool = False, workers: int | None = None) -> CapConfiguration:
    """Sample Omega_{r0}, cluster by single linkage and take the deepest point of each cluster.

    Without ``force`` a deficit above the admission threshold is refused.
    ``r0`` overrides the deficit's R - epsilon^{1/(n+2)}.
    """
    r0 = summary.r0 if r0 is None else float(r0)
    R = summary.R
    if not (summary.admitted or force):
        return CapConfiguration((), R, r0, float("nan"), "refused: deficit above admission threshold")
    if r0 <= 0:
        return CapConfiguration((), R, r0, float("nan"), "no clusters: r0 is not positive; lower epsilon")
    box = certified_box(mesh, sampling, g, r0)
    if box is None:
        return CapConfiguration((), R, r0, float("nan"), "no clusters: Omega_r0 is empty; lower r0 or raise budget")
    lo, hi = box

    def work(chunk):
        seq, size = chunk
        pts = np.random.default_rng(seq).uniform(lo, hi, (size, len(lo)))
        return pts[in_superlevel(mesh, sampling, g, pts, r0)]

    hits = np.concatenate(run_chunks(work, budget, seed, workers))
    if len(hits) == 0:
        return CapConfiguration((), R, r0, float("nan"),
                                "no clusters: Omega_r0 is empty at this budget; lower r0 or raise budget")
    # a deterministic subsample keeps single linkage quadratic cost bounded
    sub = hits
    if len(hits) > MAX_CLUSTER_POINTS:
        sub = hits[np.random.default_rng(seed).choice(len(hits), MAX_CLUSTER_POINTS, replace=False)]
    if len(sub) == 1:
        labels = np.ones(1, dtype=int)
        gam = math.inf
    else:
        Z = linkage(sub, method="single")
        gam = float(gamma) if gamma is not None else _gap_threshold(Z[:, 2], gap_ratio)
        if math.isfinite(gam):
            labels = fcluster(Z, t=gam, criterion="distance")
        else:
            labels = np.ones(len(sub), dtype=int)
    clusters = []
    for lab in np.unique(labels):
        pts = sub[labels == lab]
        center, depth = _deepest(sampling, g, pts)
        clusters.append(Cluster(center, depth, int(len(pts))))
    # deterministic order: by first coordinate, then the rest
    clusters.sort(key=lambda c: tuple(np.round(c.center, 12)))
    return CapConfiguration(tuple(clusters), R, r0, gam, "ok", int(len(hits)))


# ---------------------------------------------------------------------------
# classification and separation
# ---------------------------------------------------------------------------


def classify_centers(config: CapConfiguration, summary: DeficitSummary, g: Gauge,
                     c_fit: float = C_FIT) -> CapConfiguration:
    """Label centers boundary-cap, interior-sphere or indeterminate using tau_h = c_fit eps^{1/(n+2)^2}."""
    tau = c_fit * summary.rate
    top = (1.0 + g.cos_theta) * config.R
    out = []
    for c in config.clusters:
        h = float(c.center[-1])
        if h <= tau:
            cls, margin = "boundary-cap", tau - h
        elif h >= top - tau:
            cls, margin = "interior-sphere", h - (top - tau)
        else:
            cls, margin = "indeterminate", -min(h - tau, top - tau - h)
        out.append(Cluster(c.center, c.depth, c.n_samples, cls, float(margin)))
    return CapConfiguration(tuple(out), config.R, config.r0, config.gamma, config.status, config.n_hits)


@dataclass(frozen=True)
class Separation:
    i: int
    j: int
    metric: str
    value: float
    bound: float
    passed: bool


def separation_check(config: CapConfiguration, g: Gauge, summary: DeficitSummary,
                     c_fit: float = C_FIT) -> list[Separation]:
    """Pairwise center separations against 2R - 2 c_fit eps^{1/(n+2)^2}.

    For theta < pi/2 two boundary-cap centers are compared in F^o; every
    other pair in the Euclidean metric.
    """
    bound = 2.0 * config.R - 2.0 * c_fit * summary.rate
    out = []
    cl = config.clusters
    for i in range(len(cl)):
        for j in range(i + 1, len(cl)):
            d = cl[i].center - cl[j].center
            aniso = g.theta < math.pi / 2 and cl[i].height_class == cl[j].height_class == "boundary-cap"
            if aniso:
                val = float(g.dual(d))
            else:
                val = float(np.linalg.norm(d))
            out.append(Separation(i, j, "F^o" if aniso else "euclidean", val, bound, bool(val >= bound)))
    return out


# ---------------------------------------------------------------------------
# Hausdorff distance to the union of caps
# ---------------------------------------------------------------------------


def _sphere_points(k: int, dim: int) -> np.ndarray:
    """Near-uniform points on the unit sphere in R^dim (Fibonacci for dim 3)."""
    if dim == 2:
        t = 2 * math.pi * (np.arange(k) + 0.5) / k
        return np.column_stack([np.cos(t), np.sin(t)])
    i = np.arange(k) + 0.5
    z = 1 - 2 * i / k
    phi = math.pi * (1 + math.sqrt(5)) * i
    s = np.sqrt(1 - z * z)
    return np.column_stack([s * np.cos(phi), s * np.sin(phi), z])


def _dist_to_clipped_sphere(p: np.ndarray, c: np.ndarray, R: float) -> np.ndarray:
    """Euclidean distance from points to the sphere |x - c| = R restricted to x_{n+1} >= 0."""
    d = p - c
    r = np.linalg.norm(d, axis=1)
    safe = np.where(r > 0, r, 1.0)
    foot = c + R * d / safe[:, None]
    foot[r == 0] = c + R * np.eye(len(c))[-1]
    out = np.abs(r - R)
    out[r == 0] = R
    low = foot[:, -1] < 0
    if np.any(low):
        if c[-1] <= -R:
            out[low] = np.inf
        else:
            # nearest point on the rim: the circle of radius a in the hyperplane about the foot of c
            a = math.sqrt(max(R * R - c[-1] ** 2, 0.0))
            q = p[low]
            h = q[:, :-1] - c[:-1]
            hn = np.linalg.norm(h, axis=1)
            unit = np.where(hn[:, None] > 0, h / np.where(hn > 0, hn, 1.0)[:, None], np.eye(len(c) - 1)[0])
            rim = np.column_stack([c[:-1] + a * unit, np.zeros(len(q))])
            out[low] = np.linalg.norm(q - rim, axis=1)
    return out


@dataclass(frozen=True)
class HausdorffResult:
    dist: float
    ratio: float
    sigma_to_s: float
    s_to_sigma: float


def hausdorff_to_caps(mesh: HalfSpaceMesh, config: CapConfiguration, g: Gauge, summary: DeficitSummary,
                      sampling: SurfaceSampling | None = None, n_samples: int = 20_000) -> HausdorffResult:
    """Symmetric Hausdorff distance between Sigma and S_theta = union of clipped spheres about o_i - R cos(theta) E.

    Sigma-side points are vertices, edge midpoints and centroids, measured
    analytically against each clipped sphere; S-side points are an analytic
    sampling of each clipped sphere measured exactly against the mesh.
    """
    if config.N == 0:
        return HausdorffResult(float("inf"), float("inf"), float("inf"), float("inf"))
    R = config.R
    c = g.cos_theta
    balls = [cl.center - R * c * np.eye(len(cl.center))[-1] for cl in config.clusters]
    v = mesh.vertices
    e = mesh.elements
    sig = [v, v[e].mean(axis=1)]
    for a in range(e.shape[1]):
        for b in range(a + 1, e.shape[1]):
            sig.append(0.5 * (v[e[:, a]] + v[e[:, b]]))
    sig = np.concatenate(sig)
    d1 = np.min(np.stack([_dist_to_clipped_sphere(sig, b, R) for b in balls]), axis=0)
    sigma_to_s = float(d1.max())

    if sampling is None:
        sampling = build_sampling(mesh, g)
    per = max(64, n_samples // len(balls))
    unit = _sphere_points(per, mesh.ambient)
    s_pts = np.concatenate([b + R * unit for b in balls])
    s_pts = s_pts[s_pts[:, -1] >= 0]
    d2 = sampling.distance.euclidean(s_pts) if len(s_pts) else np.zeros(0)
    s_to_sigma = float(d2.max()) if len(d2) else 0.0
    dist = max(sigma_to_s, s_to_sigma)
    rate = summary.rate
    return HausdorffResult(dist, dist / rate if rate > 0 else float("inf"), sigma_to_s, s_to_sigma)


# ---------------------------------------------------------------------------
# full pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StabilityReport:
    deficit: DeficitSummary
    config: CapConfiguration
    separations: list
    hausdorff: HausdorffResult
    c_fit: float
    checks: dict = field(default_factory=dict)


def run_stability(mesh: HalfSpaceMesh, g: Gauge, cfg: StabilityConfig = StabilityConfig(),
                  fld: CurvatureField | None = None, sampling: SurfaceSampling | None = None) -> StabilityReport:
    if fld is None:
        fld = estimate_curvature(mesh, g)
    if sampling is None:
        sampling = build_sampling(mesh, g, cfg.h_target)
    summ = deficit(mesh, fld, g, cfg.lam, cfg.p_norms, cfg.admission, cfg.delta_regime)
    conf = extract_clusters(mesh, sampling, g, summ, cfg.budget, cfg.seed, cfg.gamma, cfg.gap_ratio, cfg.r0,
                            cfg.force, cfg.workers)
    conf = classify_centers(conf, summ, g, cfg.c_fit)
    seps = separation_check(conf, g, summ, cfg.c_fit)
    haus = hausdorff_to_caps(mesh, conf, g, summ, sampling, cfg.hausdorff_samples)
    checks = {
        "admitted": summ.admitted,
        "proven_regime": summ.proven_regime,
        "lambda_in_window": summ.in_window,
        "clusters_found": conf.N > 0,
        "classified": conf.N > 0 and all(cl.height_class != "indeterminate" for cl in conf.clusters),
        "separated": all(s.passed for s in seps),
    }
    return StabilityReport(summ, conf, seps, haus, cfg.c_fit, checks)


# ---------------------------------------------------------------------------
# exponent sweep
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    amplitude: float
    epsilon: float
    dist: float
    ratio: float
    status: str


@dataclass(frozen=True)
class SweepResult:
    rows: list
    slope: float
    intercept: float
    c_max: float
    bound_holds: bool
    monotone: bool


def exponent_sweep(base, amplitudes, g: Gauge, resolution: int = 4, cfg: StabilityConfig = StabilityConfig(),
                   perturbation_kw: dict | None = None) -> SweepResult:
    """Run the pipeline on perturbations of ``base`` and fit log dist against log epsilon.

    C_max is dist / eps^{1/(n+2)^2} at the largest amplitude; the bound is
    checked on every successful row.
    """
    from .shapes import PerturbationSpec, generate

    amps = [float(a) for a in amplitudes]
    if any(a < 0 for a in amps) or amps != sorted(amps):
        raise ValueError("amplitudes must be nonnegative and sorted")
    rows = []
    for a in amps:
        try:
            mesh = generate(PerturbationSpec(base, amplitude=a, **(perturbation_kw or {})), resolution)
            rep = run_stability(mesh, g, cfg)
            ok = rep.config.N > 0 and math.isfinite(rep.hausdorff.dist)
            rows.append(SweepRow(a, rep.deficit.epsilon, rep.hausdorff.dist, rep.hausdorff.ratio,
                                 "ok" if ok else rep.config.status))
        except Exception as exc:  # keep the partial table
            rows.append(SweepRow(a, float("nan"), float("nan"), float("nan"), f"error: {exc}"))
    good = [r for r in rows if r.status == "ok" and r.epsilon > 0 and r.dist > 0]
    slope = intercept = float("nan")
    if len(good) >= 2:
        slope, intercept = (float(x) for x in np.polyfit(np.log([r.epsilon for r in good]),
                                                          np.log([r.dist for r in good]), 1))
    n = base.dimension
    expo = 1.0 / (n + 2) ** 2
    c_max = good[-1].dist / good[-1].epsilon ** expo if good else float("nan")
    holds = bool(good) and all(r.dist <= c_max * r.epsilon ** expo * (1 + 1e-12) for r in good)
    by_eps = sorted(good, key=lambda r: r.epsilon)
    mono = all(b.dist >= a.dist for a, b in zip(by_eps, by_eps[1:]))
    return SweepResult(rows, slope, intercept, float(c_max), holds, bool(mono))
