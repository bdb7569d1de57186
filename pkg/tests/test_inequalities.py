import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caplab.curvature import estimate_curvature
from caplab.gauge import Gauge
from caplab.inequalities import (DELTA_EMP, InequalityRecord, density_floor, density_profile, dichotomy_check,
                                 michael_simon_check, michael_simon_constant, sigma_bar, topping_check)
from caplab.shapes import PerturbationSpec, cap, generate
from conftest import surface

PI = math.pi


def test_sigma_bar():
    assert sigma_bar(2) == pytest.approx(2 * math.sqrt(8 / 3), rel=1e-14)
    assert michael_simon_constant(2, PI / 2) == pytest.approx(2 / sigma_bar(2), rel=1e-14)


def test_record_pass_rule():
    assert InequalityRecord.make("a", 1.0, 2.0, 1.0, 0.0).passed
    assert InequalityRecord.make("a", 2.0, 2.0 - 1e-10, 1.0, 1e-9).passed
    assert not InequalityRecord.make("a", 2.0, 1.0, 1.0, 1e-9).passed
    assert InequalityRecord.make("a", 1.0, 3.0, 1.0, 0.0).slack == 2.0


def test_michael_simon_hemisphere(hemisphere):
    rec = michael_simon_check(hemisphere.mesh, hemisphere.fld, hemisphere.g, np.ones(hemisphere.mesh.n_vertices))
    assert rec.lhs == pytest.approx(math.sqrt(2 * PI), rel=2e-2)
    assert rec.rhs == pytest.approx(2 / sigma_bar(2) * 4 * PI, rel=2e-2)
    assert rec.passed and rec.slack > 0


def test_michael_simon_height_weight(hemisphere):
    rec = michael_simon_check(hemisphere.mesh, hemisphere.fld, hemisphere.g, lambda x: 1 + x[:, 2])
    assert rec.passed


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_michael_simon_random_weights(seed):
    s = surface(PerturbationSpec(cap(), amplitude=0.05), PI / 2)
    f = np.random.default_rng(seed).uniform(0.05, 2.0, s.mesh.n_vertices)
    assert michael_simon_check(s.mesh, s.fld, s.g, f).passed


def test_michael_simon_rejections(hemisphere, arcs):
    f = np.ones(hemisphere.mesh.n_vertices)
    f[3] = 0.0
    with pytest.raises(ValueError, match="invalid-argument"):
        michael_simon_check(hemisphere.mesh, hemisphere.fld, hemisphere.g, f)
    s = arcs[PI / 2]
    rec = michael_simon_check(s.mesh, s.fld, s.g, np.ones(s.mesh.n_vertices))
    assert rec.status.startswith("not-applicable")


def test_topping_hemisphere(hemisphere):
    t = topping_check(hemisphere.mesh, hemisphere.fld)
    assert t.ratio == pytest.approx(1 / (2 * PI), rel=1e-2)
    assert t.record.passed
    assert t.record.lhs == pytest.approx(2.0, abs=t.edge_error)


def test_topping_half_circle(arcs):
    s = arcs[PI / 2]
    t = topping_check(s.mesh, s.fld)
    assert t.ratio == pytest.approx(2 / PI, rel=1e-2)


def test_topping_scale_invariant():
    g = Gauge(PI / 3)
    r = []
    for rad in (1.0, 2.0):
        m = generate(cap(theta=PI / 3, radius=rad), 3)
        r.append(topping_check(m, estimate_curvature(m, g)).ratio)
    assert r[1] == pytest.approx(r[0], rel=1e-9)


def test_density_profile_apex(hemisphere):
    x = np.array([0.0, 0.0, 1.0])
    prof = density_profile(hemisphere.mesh, hemisphere.sampling, hemisphere.g, x, 1.4, hemisphere.fld, n_r=30)
    # Archimedes: the chordal ball of radius r cuts area pi r^2 from the unit sphere; sampling
    # perturbs the count by about the perimeter times the spacing
    err = np.abs(prof.v_euclid / (PI * prof.r ** 2) - 1)
    assert np.all(err <= 2 * hemisphere.sampling.h_euclid / prof.r)
    assert np.all(err[prof.r > 0.3] < 1e-2)
    big = prof.r > 0.3
    np.testing.assert_allclose(prof.maximal[big], PI * prof.r[big], rtol=2e-2)
    assert np.all(np.diff(prof.v_wulff) >= 0) and np.all(np.diff(prof.v_euclid) >= 0)
    assert np.all(np.diff(prof.kappa) <= 0)
    rows = prof.csv_rows(7)
    assert rows[0][0] == 7 and len(rows) == 30


def test_density_profile_arc(arcs):
    s = arcs[PI / 3]
    x = s.mesh.vertices[len(s.mesh.vertices) // 2]
    prof = density_profile(s.mesh, s.sampling, s.g, x, 0.5, s.fld)
    assert np.all(np.isnan(prof.maximal))
    err = np.abs(prof.v_euclid / (4 * np.arcsin(prof.r / 2)) - 1)
    assert np.all(err <= 2 * s.sampling.h_euclid / prof.r)


def test_density_floor_exact_caps(caps):
    for th, s in caps.items():
        assert density_floor(s.mesh, s.g, 2.0, vertices=np.arange(0, s.mesh.n_vertices, 5)) >= DELTA_EMP


def test_dichotomy(caps, hemisphere):
    for s in caps.values():
        d = dichotomy_check(s.mesh, s.fld, DELTA_EMP)
        assert d.passed and d.failures == 0
        assert np.all(s.mesh.area < DELTA_EMP * d.radii ** 2)


def test_dichotomy_not_applicable_in_the_plane(arcs):
    s = arcs[PI / 2]
    d = dichotomy_check(s.mesh, s.fld, DELTA_EMP)
    assert d.passed and d.status.startswith("not-applicable")
