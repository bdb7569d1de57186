import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caplab.curvature import estimate_curvature
from caplab.gauge import Gauge
from caplab.identities import (FLOOR, IdentityResidual, VectorField, capillary_divergence_residual,
                               first_variation_residual, heintze_karcher_deficit, isotropic_ratio_gap,
                               minkowski_residual, montiel_ros_integral, position_field, radial_field,
                               verify_identities, wetted_area_residual)
from caplab.shapes import CapSpec, PerturbationSpec, cap, cap_volume_coefficient, generate
from conftest import THETAS, surface

PI = math.pi


def test_relative_residual_definition():
    r = IdentityResidual.from_sides("x", 2.0, 1.5, "s")
    assert r.absolute == 0.5 and r.relative == 0.25
    z = IdentityResidual.from_sides("z", 0.0, 0.0, "s")
    assert z.relative == 0.0
    assert IdentityResidual.from_sides("t", 1e-20, 0.0, "s").relative == pytest.approx(1e-20 / FLOOR)


def test_minkowski_hemisphere(hemisphere):
    r = minkowski_residual(hemisphere.mesh, hemisphere.fld, hemisphere.g)
    assert r.lhs == pytest.approx(4 * PI, rel=1e-2)
    assert r.rhs == pytest.approx(4 * PI, rel=1e-2)
    assert r.relative < 1e-2


def test_minkowski_half_circle(arcs):
    s = arcs[PI / 2]
    r = minkowski_residual(s.mesh, s.fld, s.g)
    assert r.lhs == pytest.approx(PI, rel=1e-2)
    assert r.rhs == pytest.approx(PI, rel=1e-2)


def test_minkowski_scaled_cap():
    g = Gauge(PI / 3)
    m = generate(cap(theta=PI / 3, radius=2.0), 4)
    r = minkowski_residual(m, estimate_curvature(m, g), g)
    m1 = generate(cap(theta=PI / 3), 4)
    r1 = minkowski_residual(m1, estimate_curvature(m1, g), g)
    assert r.relative < 1e-2
    assert r.lhs == pytest.approx(4 * r1.lhs, rel=1e-9)


def test_capillary_divergence_hemisphere(hemisphere):
    m, f, g = hemisphere.mesh, hemisphere.fld, hemisphere.g
    one = capillary_divergence_residual(m, f, g, np.ones(m.n_vertices))
    assert one.lhs == pytest.approx(-2 * PI, rel=1e-2)
    assert one.relative < 1e-2
    z = capillary_divergence_residual(m, f, g, lambda x: x[:, 2])
    # f = x_3 vanishes on Gamma; int <grad x_3, E> = int (1 - nu_3^2) = 4pi/3, int H x_3 nu_3 = 4pi/3
    assert z.lhs == 0.0
    assert abs(z.rhs) < 2e-2 * 4 * PI / 3


def test_capillary_divergence_closed_sphere():
    g = Gauge(PI / 2)
    m = generate(CapSpec.sphere((0, 0, 3), 1.0, PI / 2), 4)
    r = capillary_divergence_residual(m, estimate_curvature(m, g), g, lambda x: 1 + x[:, 0])
    assert r.lhs == 0.0
    assert abs(r.rhs) < 2e-2


def test_wetted_area(caps):
    for th, s in caps.items():
        r = wetted_area_residual(s.mesh, s.fld)
        assert r.rhs == pytest.approx(PI * math.sin(th) ** 2, rel=1e-2)
        assert r.relative < 1e-2


def test_wetted_area_interior_sphere():
    g = Gauge(PI / 2)
    m = generate(CapSpec.sphere((0, 0, 3), 1.0, PI / 2), 3)
    r = wetted_area_residual(m, estimate_curvature(m, g))
    assert r.rhs == 0.0 and abs(r.lhs) < 1e-2


def test_first_variation_hemisphere(hemisphere):
    first, second = first_variation_residual(hemisphere.mesh, hemisphere.fld, hemisphere.g, lam=2.0)
    assert first.lhs == pytest.approx(4 * PI, rel=1e-2)
    assert first.rhs == pytest.approx(4 * PI, rel=1e-2)
    assert second.relative < 2e-2


def test_first_variation_radial_family(caps):
    for th, s in caps.items():
        X = radial_field((0.2, -0.1, 0.0), scale=0.8)
        first, second = first_variation_residual(s.mesh, s.fld, s.g, X)
        assert first.relative < 2e-2
        assert second.relative < 2e-2


def test_radial_field_derivatives():
    X = radial_field((0.3, 0.1, 0.0), scale=0.7)
    x = np.random.default_rng(2).normal(size=(5, 3))
    h = 1e-6
    num = np.stack([(X.value(x + h * e) - X.value(x - h * e)) / (2 * h) for e in np.eye(3)], axis=2)
    np.testing.assert_allclose(X.jacobian(x), num, atol=1e-8)
    np.testing.assert_allclose(X.divergence(x), np.trace(num, axis1=1, axis2=2), atol=1e-8)
    with pytest.raises(ValueError):
        radial_field((0, 0, 0.5))


def test_non_tangent_field_rejected(hemisphere):
    up = VectorField("up", lambda x: np.tile([0.0, 0.0, 1.0], (len(x), 1)),
                     lambda x: np.zeros((len(x), 3, 3)), lambda x: np.zeros(len(x)))
    with pytest.raises(ValueError, match="not tangent"):
        first_variation_residual(hemisphere.mesh, hemisphere.fld, hemisphere.g, up)


def test_verify_identities_battery(caps):
    for th, s in caps.items():
        res = verify_identities(s.mesh, s.fld, s.g)
        assert len(res) == 6
        assert max(r.relative for r in res) < 1e-2


@pytest.mark.parametrize("theta", THETAS)
def test_residuals_shrink_under_refinement(theta):
    g = Gauge(theta)
    worst = []
    for res in (3, 4):
        m = generate(cap(theta=theta), res)
        worst.append([r.absolute for r in verify_identities(m, estimate_curvature(m, g), g)])
    coarse, fine = np.array(worst)
    big = coarse > 1e-10
    assert np.all(fine[big] < coarse[big])


@settings(max_examples=10, deadline=None)
@given(st.sampled_from(THETAS), st.floats(0.5, 3.0))
def test_identities_scale_invariant(theta, radius):
    # relative residuals do not depend on the cap size (f = 1 + x_{n+1} is not scale free)
    g = Gauge(theta)
    rel = []
    for rad in (1.0, radius):
        m = generate(cap(theta=theta, radius=rad), 3)
        rel.append([r.relative for r in verify_identities(m, estimate_curvature(m, g), g) if "x_n+1" not in r.name])
    np.testing.assert_allclose(rel[1], rel[0], rtol=1e-6, atol=1e-12)


def test_heintze_karcher_exact_caps(caps, arcs):
    for s in list(caps.values()) + list(arcs.values()):
        hk = heintze_karcher_deficit(s.mesh, s.fld, s.g)
        assert hk.applicable
        assert abs(hk.relative) < 1e-2


def test_heintze_karcher_perturbed():
    s = surface(PerturbationSpec(cap(), amplitude=0.1), PI / 2)
    hk = heintze_karcher_deficit(s.mesh, s.fld, s.g)
    assert hk.applicable
    assert hk.relative > 0.02


def test_heintze_karcher_not_applicable():
    g = Gauge(PI / 2)
    m = generate(PerturbationSpec(cap(), amplitude=0.6, width=0.3), 3)
    f = estimate_curvature(m, g)
    hk = heintze_karcher_deficit(m, f, g)
    assert not hk.applicable
    assert len(hk.offending) > 0
    assert np.all(f.mean_curvature[hk.offending] <= 1e-6)


def test_montiel_ros_exact(caps, hemisphere):
    mr = montiel_ros_integral(hemisphere.mesh, hemisphere.fld, hemisphere.g)
    assert mr.slab == pytest.approx(2 * PI / 3, rel=1e-2)
    s = caps[PI / 3]
    mr = montiel_ros_integral(s.mesh, s.fld, s.g)
    assert mr.slab == pytest.approx(cap_volume_coefficient(2, PI / 3), rel=1e-2)
    assert mr.monotone and len(mr.flagged) == 0


@pytest.mark.parametrize("amp", [0.02, 0.05, 0.1])
def test_montiel_ros_chain_perturbed(amp):
    s = surface(PerturbationSpec(cap(), amplitude=amp), PI / 2)
    mr = montiel_ros_integral(s.mesh, s.fld, s.g)
    assert mr.monotone
    assert mr.slack_volume_slab > -1e-2 * mr.volume
    assert mr.slack_slab_bound > -1e-2 * mr.volume


def test_slab_polynomial_matches_quadrature():
    from scipy.integrate import quad

    from caplab.identities import _slab_columns

    k = np.array([[0.3, 1.7], [-0.4, 0.9]])
    t = np.array([1 / 1.7, 1 / 0.9])
    got = _slab_columns(k, t)
    want = [quad(lambda s, a=a: np.prod(1 - s * a), 0, te)[0] for a, te in zip(k, t)]
    np.testing.assert_allclose(got, want, rtol=1e-12)


def test_isotropic_ratio_gap(caps):
    for s in caps.values():
        assert isotropic_ratio_gap(s.fld, s.g) < 1e-12


def test_position_field_shapes():
    X = position_field(1)
    x = np.ones((4, 2))
    assert X.jacobian(x).shape == (4, 2, 2)
    np.testing.assert_array_equal(X.divergence(x), 2.0)
