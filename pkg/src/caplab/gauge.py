"""Capillary gauge F(xi) = |xi| - cos(theta) <xi, E>, its gradient and its dual.

Vectors are arrays whose last axis has length n+1; the last coordinate is the
vertical direction E.  All functions broadcast over leading axes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

THETA_MIN = 0.05


@dataclass(frozen=True)
class Gauge:
    theta: float
    dimension: int = 2
    theta_min: float = THETA_MIN

    def __post_init__(self):
        if not (0.0 < self.theta < math.pi):
            raise ValueError(f"theta out of range: {self.theta!r} not in (0, pi)")
        if not (self.theta_min <= self.theta <= math.pi - self.theta_min):
            raise ValueError(
                f"theta out of range: {self.theta!r} not in "
                f"[{self.theta_min}, pi - {self.theta_min}]"
            )
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")

    @property
    def cos_theta(self) -> float:
        return math.cos(self.theta)

    @property
    def sin_theta(self) -> float:
        return math.sin(self.theta)

    @property
    def ambient(self) -> int:
        return self.dimension + 1

    def value(self, xi):
        """F(xi); positively 1-homogeneous, zero only at the origin."""
        xi = np.asarray(xi, dtype=float)
        return np.linalg.norm(xi, axis=-1) - self.cos_theta * xi[..., -1]

    def gradient(self, nu, tol: float = 1e-12):
        """Anisotropic normal nu - cos(theta) E for unit vectors ``nu``."""
        nu = np.asarray(nu, dtype=float)
        norms = np.linalg.norm(nu, axis=-1)
        if np.any(np.abs(norms - 1.0) > tol):
            raise ValueError("gauge_gradient expects unit vectors")
        out = nu.copy()
        out[..., -1] -= self.cos_theta
        return out

    def dual(self, x):
        """Dual gauge F^o; its unit sphere is the Wulff shape |x + cos(theta) E| = 1.

        The explicit quotient loses precision when cos(theta) <x, E> > 0 and
        sin(theta) is small, so that branch uses the conjugate form.
        """
        x = np.asarray(x, dtype=float)
        c, s = self.cos_theta, self.sin_theta
        sq = np.einsum("...i,...i->...", x, x)
        cz = c * x[..., -1]
        root = np.sqrt(np.maximum(cz * cz + s * s * sq, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            standard = sq / (root - cz)
            stable = (root + cz) / (s * s)
        out = np.where(cz > 0.0, stable, standard)
        return np.where(sq > 0.0, out, 0.0)

    def bounds(self) -> tuple[float, float, float, float]:
        """(m_F, M_F, m_dual, M_dual): extrema of F and F^o on the unit sphere."""
        a = abs(self.cos_theta)
        return 1.0 - a, 1.0 + a, 1.0 / (1.0 + a), 1.0 / (1.0 - a)

    @property
    def lipschitz(self) -> float:
        """Lipschitz constant of the shifted distance, 1 / (1 - |cos(theta)|)."""
        return 1.0 / (1.0 - abs(self.cos_theta))

    def wulff_center(self, o, radius):
        """Euclidean center of the Wulff ball of F^o-radius ``radius`` at ``o``."""
        o = np.array(o, dtype=float)
        o[..., -1] -= radius * self.cos_theta
        return o


def gauge_value(g: Gauge, xi):
    return g.value(xi)


def gauge_gradient(g: Gauge, nu):
    return g.gradient(nu)


def dual_gauge(g: Gauge, x):
    return g.dual(x)


def gauge_bounds(g: Gauge):
    return g.bounds()
