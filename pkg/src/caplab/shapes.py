"""Analytic test shapes: theta-caps, interior spheres, perturbed caps, probes.

A cap is described by its anchor ``o`` and radius ``R``: the region is the
Wulff ball W_R(o) = B_R(o - R cos(theta) E) clipped to the upper half-space.
With ``o`` on the hyperplane the surface meets it at angle theta; a lifted
anchor gives a larger contact angle or a sphere floating above the plane.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gauge import Gauge
from .mesh import HalfSpaceMesh, build_mesh, merge_meshes
from .special import ball_volume, betainc


class ShapeError(ValueError):
    pass


def cap_volume_coefficient(n: int, theta: float) -> float:
    """Volume of B_1(-cos(theta) E) clipped to the upper half-space of R^{n+1}.

    ``theta = pi`` stands for a ball that misses the hyperplane.
    """
    if not (0.0 < theta <= math.pi):
        raise ValueError(f"theta out of range: {theta!r} not in (0, pi]")
    w = ball_volume(n + 1)
    if theta == math.pi:
        return w
    half = 0.5 * w * betainc((n + 2) / 2.0, 0.5, math.sin(theta) ** 2)
    return half if theta < math.pi / 2 else w - half


def shifted_contact_angle(o, rho: float, g: Gauge) -> tuple[float, bool]:
    """Contact angle of W_rho(o) with the hyperplane and whether it misses it."""
    c = g.cos_theta - float(np.asarray(o, dtype=float)[-1]) / rho
    if c < -1.0:
        return math.pi, True
    return math.acos(min(1.0, c)), False


@dataclass(frozen=True)
class CapQuantities:
    volume: float
    mean_curvature: float
    area: float
    wetted_area: float
    boundary_measure: float
    anisotropic_perimeter: float


def exact_cap_quantities(R: float, g: Gauge) -> CapQuantities:
    n, th, c = g.dimension, g.theta, g.cos_theta
    s = g.sin_theta
    if n == 1:
        area, wet, gam = 2 * th * R, 2 * R * s, 2.0
    elif n == 2:
        area, wet, gam = 2 * math.pi * R * R * (1 - c), math.pi * (R * s) ** 2, 2 * math.pi * R * s
    else:
        raise ValueError("closed forms implemented for n = 1, 2")
    return CapQuantities(
        volume=cap_volume_coefficient(n, th) * R ** (n + 1),
        mean_curvature=n / R,
        area=area,
        wetted_area=wet,
        boundary_measure=gam,
        anisotropic_perimeter=area - c * wet,
    )


# ---------------------------------------------------------------------------
# specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CapSpec:
    center: tuple
    radius: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.radius <= 0:
            raise ShapeError("radius must be positive")
        if self.center[-1] < 0:
            raise ShapeError("anchor must lie in the closed upper half-space")
        if self.ball_center[-1] + self.radius <= 0:
            raise ShapeError("cap lies entirely below the hyperplane")

    @classmethod
    def sphere(cls, ball_center, radius, theta):
        """Interior sphere given by its Euclidean center."""
        o = np.array(ball_center, dtype=float)
        o[-1] += radius * math.cos(theta)
        return cls(tuple(o), radius, theta)

    @property
    def dimension(self) -> int:
        return len(self.center) - 1

    @property
    def ball_center(self) -> np.ndarray:
        o = np.array(self.center)
        o[-1] -= self.radius * math.cos(self.theta)
        return o

    @property
    def classification(self) -> str:
        if self.center[-1] == 0.0:
            return "boundary-cap"
        if self.ball_center[-1] > self.radius:
            return "interior-sphere"
        return "truncated"

    @property
    def polar_extent(self) -> float:
        """Largest polar angle (from the top) of the surface above the hyperplane."""
        if self.center[-1] == 0.0:
            return self.theta
        t = -self.ball_center[-1] / self.radius
        return math.pi if t <= -1.0 else math.acos(t)


@dataclass(frozen=True)
class PerturbationSpec:
    base: CapSpec
    amplitude: float = 0.0
    n_bumps: int = 3
    width: float = 0.5
    delta_gamma: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.amplitude < 0:
            raise ShapeError("amplitude must be nonnegative")
        if self.base.classification != "boundary-cap":
            raise ShapeError("perturbations are defined for boundary caps")


@dataclass(frozen=True)
class CompositeSpec:
    parts: tuple = field(default=())


@dataclass(frozen=True)
class ProbeSpec:
    """A cap plus a tiny far-away sphere of radius ``eps_radius``."""

    base: CapSpec
    eps_radius: float | None = None
    distance: float | None = None
    height: float | None = None

    def parts(self) -> tuple:
        R = self.base.radius
        eps = 0.02 * R if self.eps_radius is None else self.eps_radius
        dist = 10.0 * R if self.distance is None else self.distance
        h = 5.0 * R if self.height is None else self.height
        if dist < 10.0 * R or h < 5.0 * R:
            raise ShapeError("probe sphere must sit at distance >= 10R and height >= 5R")
        c = self.base.ball_center.copy()
        c[0] += R + dist + eps
        c[-1] = h
        return (self.base, CapSpec.sphere(c, eps, self.base.theta))


def rings_per_quadrant(resolution: int) -> int:
    if resolution < 1:
        raise ShapeError("resolution must be at least 1")
    return 5 * 2 ** (resolution - 1)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------


def generate(spec, resolution: int = 4) -> HalfSpaceMesh:
    if isinstance(spec, CapSpec):
        return _cap_mesh(spec, resolution)
    if isinstance(spec, PerturbationSpec):
        return _cap_mesh(spec.base, resolution, perturbation=spec)
    if isinstance(spec, ProbeSpec):
        return generate(CompositeSpec(spec.parts()), resolution)
    if isinstance(spec, CompositeSpec):
        parts = list(spec.parts)
        if not parts:
            raise ShapeError("empty composite")
        caps = [p.base if isinstance(p, PerturbationSpec) else p for p in parts]
        for i in range(len(caps)):
            for j in range(i + 1, len(caps)):
                if _clipped_balls_meet(caps[i], caps[j]):
                    raise ShapeError(f"components {i} and {j} overlap")
        return merge_meshes([generate(p, resolution) for p in parts])
    raise ShapeError(f"unsupported shape spec {type(spec).__name__}")


def _clipped_balls_meet(a: CapSpec, b: CapSpec) -> bool:
    ca, cb = a.ball_center, b.ball_center
    ra, rb = a.radius, b.radius
    d = cb - ca
    dist = float(np.linalg.norm(d))
    if dist >= ra + rb:
        return False
    if dist <= abs(ra - rb):
        inner, rin = (ca, ra) if ra <= rb else (cb, rb)
        return inner[-1] + rin >= 0.0
    # highest point of the lens B_a n B_b
    tops = []
    for c, r, oc, orad in ((ca, ra, cb, rb), (cb, rb, ca, ra)):
        top = c.copy()
        top[-1] += r
        if np.linalg.norm(top - oc) <= orad:
            tops.append(top[-1])
    u = d / dist
    t = (dist * dist + ra * ra - rb * rb) / (2 * dist)
    m = ca + t * u
    rho = math.sqrt(max(ra * ra - t * t, 0.0))
    e = np.zeros_like(u)
    e[-1] = 1.0
    perp = e - u[-1] * u
    pn = np.linalg.norm(perp)
    tops.append(m[-1] + (rho * perp[-1] / pn if pn > 1e-15 else 0.0))
    return max(tops) >= 0.0


def _bump_field(spec: PerturbationSpec, n: int):
    """Return a callable of unit directions (about the ball center) giving displacement."""
    phi_max = spec.base.polar_extent
    core = max(phi_max - 2 * spec.delta_gamma, 0.0)
    rng = np.random.default_rng(spec.seed)
    if n == 2:
        cz = rng.uniform(math.cos(core), 1.0, spec.n_bumps)
        psi = rng.uniform(0, 2 * math.pi, spec.n_bumps)
        sz = np.sqrt(1 - cz * cz)
        centers = np.column_stack([sz * np.cos(psi), sz * np.sin(psi), cz])
    else:
        ang = rng.uniform(-core, core, spec.n_bumps)
        centers = np.column_stack([np.sin(ang), np.cos(ang)])

    def raw(dirs):
        gam = np.arccos(np.clip(dirs @ centers.T, -1.0, 1.0))
        return np.exp(-0.5 * (gam / spec.width) ** 2).sum(axis=1)

    # normalize on a fixed angular grid so the peak displacement is the amplitude
    if n == 2:
        ph, ps = np.meshgrid(np.linspace(0, phi_max, 181), np.linspace(0, 2 * math.pi, 361))
        grid = np.column_stack([(np.sin(ph) * np.cos(ps)).ravel(), (np.sin(ph) * np.sin(ps)).ravel(),
                                np.cos(ph).ravel()])
    else:
        ph = np.linspace(-phi_max, phi_max, 2001)
        grid = np.column_stack([np.sin(ph), np.cos(ph)])
    peak = float((raw(grid) * _cutoff(np.arccos(np.clip(grid[:, -1], -1, 1)), phi_max, spec.delta_gamma)).max())

    def field_(dirs):
        phi = np.arccos(np.clip(dirs[:, -1], -1.0, 1.0))
        return spec.amplitude * raw(dirs) * _cutoff(phi, phi_max, spec.delta_gamma) / peak

    return field_


def _cutoff(phi, phi_max, delta):
    # C^2 quintic smoothstep: 1 deep inside, 0 within delta of the contact line
    s = np.clip((phi_max - delta - phi) / delta, 0.0, 1.0)
    return s ** 3 * (10 - 15 * s + 6 * s * s)


def _cap_mesh(spec: CapSpec, resolution: int, perturbation: PerturbationSpec | None = None):
    n = spec.dimension
    q = rings_per_quadrant(resolution)
    c, R = spec.ball_center, spec.radius
    phi_max = spec.polar_extent
    closed = phi_max >= math.pi
    step = (math.pi / 2) / q
    if n == 1:
        m = max(4, int(round(2 * phi_max / step)))
        if closed:
            ang = np.linspace(0, 2 * math.pi, m, endpoint=False)
            dirs = np.column_stack([np.cos(ang), np.sin(ang)])
            segs = np.column_stack([np.arange(m), (np.arange(m) + 1) % m])
        else:
            ang = np.linspace(math.pi / 2 - phi_max, math.pi / 2 + phi_max, m + 1)
            dirs = np.column_stack([np.cos(ang), np.sin(ang)])
            segs = np.column_stack([np.arange(m), np.arange(1, m + 1)])
        radii = np.full(len(dirs), R)
        if perturbation is not None and perturbation.amplitude > 0:
            radii = radii + _bump_field(perturbation, n)(dirs)
        pts = c + radii[:, None] * dirs
        if not closed:
            pts[[0, -1], -1] = 0.0
        return build_mesh(pts, segs, 1)

    m = max(2, int(round(phi_max / step)))
    phis = np.linspace(0.0, phi_max, m + 1)
    dphi = phi_max / m
    ring_dirs, ring_idx, ring_psi = [np.array([[0.0, 0.0, 1.0]])], [np.array([0])], [np.array([0.0])]
    count = 1
    last = m if closed else m + 1
    for k in range(1, last):
        # the boundary ring keeps its corners well under the validator's limit
        floor = 16 if k == m else 6
        nk = max(floor, int(round(2 * math.pi * math.sin(phis[k]) / dphi)))
        psi = 2 * math.pi * (np.arange(nk) + 0.5 * (k % 2)) / nk
        sp = math.sin(phis[k])
        ring_dirs.append(np.column_stack([sp * np.cos(psi), sp * np.sin(psi), np.full(nk, math.cos(phis[k]))]))
        ring_idx.append(np.arange(count, count + nk))
        ring_psi.append(psi)
        count += nk
    if closed:
        ring_dirs.append(np.array([[0.0, 0.0, -1.0]]))
        ring_idx.append(np.array([count]))
        ring_psi.append(np.array([0.0]))
    dirs = np.concatenate(ring_dirs)
    tris = []
    for k in range(len(ring_idx) - 1):
        tris.append(_stitch(ring_idx[k], ring_psi[k], ring_idx[k + 1], ring_psi[k + 1]))
    tris = np.concatenate(tris)
    radii = np.full(len(dirs), R)
    if perturbation is not None and perturbation.amplitude > 0:
        radii = radii + _bump_field(perturbation, n)(dirs)
    pts = c + radii[:, None] * dirs
    if not closed:
        pts[ring_idx[-1], -1] = 0.0
    # orient outward from the ball center
    nrm = np.cross(pts[tris[:, 1]] - pts[tris[:, 0]], pts[tris[:, 2]] - pts[tris[:, 0]])
    outward = np.einsum("ij,ij->i", nrm, pts[tris].mean(axis=1) - c) > 0
    tris[~outward] = tris[~outward][:, ::-1]
    return build_mesh(pts, tris, 2)


def _stitch(ia, pa, ib, pb):
    """Triangulate the band between two rings by merging their angular orders."""
    na, nb = len(ia), len(ib)
    if na == 1 or nb == 1:
        hub, rim = (ia[0], ib) if na == 1 else (ib[0], ia)
        return np.column_stack([np.full(len(rim), hub), rim, np.roll(rim, -1)])
    tris = []
    i = j = 0
    # walk both rings once around, always advancing the one whose next vertex comes first
    while i < na or j < nb:
        ta = pa[(i + 1) % na] + (2 * math.pi if i + 1 >= na else 0.0)
        tb = pb[(j + 1) % nb] + (2 * math.pi if j + 1 >= nb else 0.0)
        if j >= nb or (i < na and ta <= tb):
            tris.append((ia[i % na], ia[(i + 1) % na], ib[j % nb]))
            i += 1
        else:
            tris.append((ia[i % na], ib[(j + 1) % nb], ib[j % nb]))
            j += 1
    return np.array(tris, dtype=np.int64)


def cap(center=None, radius=1.0, theta=math.pi / 2, dimension=2) -> CapSpec:
    if center is None:
        center = (0.0,) * (dimension + 1)
    return CapSpec(tuple(center), radius, theta)
