"""Ball volumes and the regularized incomplete beta function."""

from __future__ import annotations

import math

_TINY = 1e-300


def ball_volume(k: int) -> float:
    """Lebesgue measure of the unit ball in R^k."""
    if k == 0:
        return 1.0
    if k == 1:
        return 2.0
    if k == 2:
        return math.pi
    if k == 3:
        return 4.0 * math.pi / 3.0
    return math.pi ** (k / 2.0) / math.gamma(k / 2.0 + 1.0)


def _beta_cf(a: float, b: float, x: float, tol: float, max_iter: int) -> float:
    # modified Lentz evaluation of the continued fraction for I_x(a, b)
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < tol:
            return h
    raise RuntimeError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float, tol: float = 1e-15, max_iter: int = 500) -> float:
    """Regularized incomplete beta I_x(a, b) for a, b > 0 and 0 <= x <= 1.

    The continued fraction converges fast for x < (a + 1) / (a + b + 2); on the
    other side the symmetry I_x(a, b) = 1 - I_{1-x}(b, a) is used.
    """
    if a <= 0.0 or b <= 0.0:
        raise ValueError("betainc requires a > 0 and b > 0")
    if not (0.0 <= x <= 1.0):
        raise ValueError("betainc requires 0 <= x <= 1")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
        + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x, tol, max_iter) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x, tol, max_iter) / b
