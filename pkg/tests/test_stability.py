import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caplab.gauge import Gauge
from caplab.shapes import CapSpec, CompositeSpec, PerturbationSpec, cap
from caplab.stability import (Cluster, CapConfiguration, StabilityConfig, _dist_to_clipped_sphere, _gap_threshold,
                              classify_centers, deficit, exponent_sweep, extract_clusters, hausdorff_to_caps,
                              run_stability, separation_check)
from conftest import surface

PI = math.pi


def test_deficit_exact_hemisphere(hemisphere):
    d = deficit(hemisphere.mesh, hemisphere.fld, hemisphere.g)
    assert d.fitted
    assert d.lam == pytest.approx(2.0, rel=1e-2)
    assert d.R == pytest.approx(1.0, rel=1e-2)
    assert d.epsilon < 0.05
    assert d.in_window and d.admitted and d.proven_regime
    assert d.r0 == pytest.approx(d.R - d.epsilon ** 0.25)
    assert d.rate == pytest.approx(d.epsilon ** (1 / 16))


def test_deficit_given_lambda(hemisphere):
    d = deficit(hemisphere.mesh, hemisphere.fld, hemisphere.g, lam=1.5, p_norms=(1.0, 2.0))
    assert not d.fitted and d.lam == 1.5
    assert d.lp_norms[2.0] == pytest.approx(d.epsilon)
    assert d.lp_norms[1.0] == pytest.approx(0.5 * 2 * PI, rel=2e-2)
    with pytest.raises(ValueError):
        deficit(hemisphere.mesh, hemisphere.fld, hemisphere.g, lam=-1.0)


def test_fitted_lambda_minimizes(caps):
    s = caps[PI / 3]
    d = deficit(s.mesh, s.fld, s.g)
    for t in (d.lam * 0.99, d.lam * 1.01):
        assert deficit(s.mesh, s.fld, s.g, lam=t).epsilon >= d.epsilon


def test_gap_threshold():
    assert _gap_threshold(np.array([0.01, 0.011, 0.012, 2.0]), 3.0) == pytest.approx(math.sqrt(0.012 * 2.0))
    assert _gap_threshold(np.array([0.01, 0.015, 0.02]), 3.0) == math.inf
    assert _gap_threshold(np.array([0.5]), 3.0) == math.inf


@settings(max_examples=50)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0, 3), st.floats(-0.9, 0.9))
def test_dist_to_clipped_sphere_brute_force(x, y, z, ch):
    c = np.array([0.0, 0.0, ch])
    t = np.linspace(0, PI, 400)
    p = np.linspace(0, 2 * PI, 800)
    T, P = np.meshgrid(t, p)
    pts = c + np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1).reshape(-1, 3)
    pts = pts[pts[:, 2] >= 0]
    q = np.array([[x, y, z]])
    brute = np.min(np.linalg.norm(pts - q, axis=1))
    assert _dist_to_clipped_sphere(q, c, 1.0)[0] == pytest.approx(brute, abs=1e-2)


def test_classification_and_separation():
    g = Gauge(PI / 3)
    summ = SimpleNamespace(rate=0.5)
    clusters = (Cluster(np.array([0.0, 0, 0]), 1.0, 10), Cluster(np.array([5.0, 0, 1.5]), 1.0, 10),
                Cluster(np.array([9.0, 0, 0.7]), 1.0, 10))
    conf = classify_centers(CapConfiguration(clusters, 1.0, 0.5, 1.0), summ, g, c_fit=0.1)
    assert [c.height_class for c in conf.clusters] == ["boundary-cap", "interior-sphere", "indeterminate"]
    seps = separation_check(conf, g, summ, c_fit=0.1)
    assert len(seps) == 3 and all(s.passed for s in seps)
    assert seps[0].bound == pytest.approx(2.0 - 0.1)


def test_separation_uses_dual_gauge_for_acute_boundary_caps():
    g = Gauge(PI / 3)
    summ = SimpleNamespace(rate=0.0)
    clusters = (Cluster(np.array([0.0, 0, 0]), 1.0, 1, "boundary-cap"),
                Cluster(np.array([1.9, 0, 0]), 1.0, 1, "boundary-cap"))
    sep = separation_check(CapConfiguration(clusters, 1.0, 0.5, 1.0), g, summ)[0]
    assert sep.metric == "F^o"
    assert sep.value == pytest.approx(g.dual(np.array([1.9, 0, 0])))


def test_two_hemispheres_recovery():
    s = surface(CompositeSpec((cap(), cap(center=(4, 0, 0)))), PI / 2, 3)
    rep = run_stability(s.mesh, s.g, StabilityConfig(budget=50_000, seed=1), s.fld, s.sampling)
    assert rep.config.N == 2
    np.testing.assert_allclose(rep.config.centers, [[0, 0, 0], [4, 0, 0]], atol=0.05)
    assert all(c.height_class == "boundary-cap" for c in rep.config.clusters)
    assert all(rep.checks.values())
    assert rep.hausdorff.dist < 0.05


def test_interior_sphere_recovery():
    s = surface(CapSpec.sphere((0, 0, 3), 1.0, PI / 2), PI / 2, 3)
    rep = run_stability(s.mesh, s.g, StabilityConfig(budget=50_000, seed=1), s.fld, s.sampling)
    assert rep.config.N == 1
    assert rep.config.clusters[0].height_class == "interior-sphere"
    np.testing.assert_allclose(rep.config.centers[0], [0, 0, 3], atol=0.05)


def test_acute_cap_wulff_center():
    s = surface(cap(theta=PI / 3), PI / 3, 3)
    rep = run_stability(s.mesh, s.g, StabilityConfig(budget=50_000, seed=2), s.fld, s.sampling)
    assert rep.config.N == 1
    np.testing.assert_allclose(rep.config.centers[0], [0, 0, 0], atol=0.05)
    assert rep.hausdorff.dist < 0.05


def test_refusal_above_admission():
    s = surface(PerturbationSpec(cap(), amplitude=0.1), PI / 2, 3)
    rep = run_stability(s.mesh, s.g, StabilityConfig(budget=20_000, seed=0, admission=1e-6), s.fld, s.sampling)
    assert rep.config.N == 0
    assert rep.config.status.startswith("refused")
    assert not rep.checks["admitted"]
    assert math.isnan(rep.hausdorff.dist) or rep.hausdorff.dist == math.inf


def test_empty_superlevel_reports_reason():
    s = surface(cap(), PI / 2, 3)
    summ = deficit(s.mesh, s.fld, s.g)
    conf = extract_clusters(s.mesh, s.sampling, s.g, summ, budget=10_000, r0=1.5)
    assert conf.N == 0 and conf.status.startswith("no clusters")


def test_hausdorff_zero_for_exact_configuration():
    s = surface(cap(), PI / 2, 3)
    summ = deficit(s.mesh, s.fld, s.g, lam=2.0)
    conf = CapConfiguration((Cluster(np.zeros(3), 1.0, 1),), 1.0, 0.5, 1.0)
    h = hausdorff_to_caps(s.mesh, conf, s.g, summ, s.sampling, n_samples=5000)
    assert h.dist < 0.01
    moved = CapConfiguration((Cluster(np.array([0.1, 0, 0]), 1.0, 1),), 1.0, 0.5, 1.0)
    assert hausdorff_to_caps(s.mesh, moved, s.g, summ, s.sampling, n_samples=5000).dist == pytest.approx(0.1, abs=0.01)


def test_run_stability_deterministic():
    s = surface(CompositeSpec((cap(), cap(center=(4, 0, 0)))), PI / 2, 3)
    cfg = StabilityConfig(budget=30_000, seed=5)
    a = run_stability(s.mesh, s.g, cfg, s.fld, s.sampling)
    b = run_stability(s.mesh, s.g, StabilityConfig(budget=30_000, seed=5, workers=3), s.fld, s.sampling)
    np.testing.assert_array_equal(a.config.centers, b.config.centers)
    assert a.hausdorff == b.hausdorff


def test_sweep_validates_amplitudes():
    with pytest.raises(ValueError):
        exponent_sweep(cap(), [0.08, 0.02], Gauge(PI / 2))
