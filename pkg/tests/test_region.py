import math

import numpy as np
import pytest

from caplab.gauge import Gauge
from caplab.region import anisotropic_perimeter, extrinsic_diameter, non_collapsedness, region_quantities
from caplab.shapes import CompositeSpec, PerturbationSpec, cap, generate

PI = math.pi


@pytest.fixture(scope="module")
def hemi_q(hemisphere):
    return region_quantities(hemisphere.mesh, hemisphere.g, beta0=0.25)


def test_hemisphere_quantities(hemi_q):
    q = hemi_q
    assert q.volume == pytest.approx(2 * PI / 3, rel=1e-2)
    assert q.wetted_area == pytest.approx(PI, rel=1e-2)
    assert q.area == pytest.approx(2 * PI, rel=1e-2)
    assert q.anisotropic_perimeter == pytest.approx(2 * PI, rel=1e-2)
    assert q.perimeter == pytest.approx(q.area + q.wetted_area)
    assert q.d_m == pytest.approx(1.0, rel=1e-2)
    assert q.d_ext == pytest.approx(2.0, rel=1e-2)


def test_hemisphere_isoperimetric_radius(hemi_q):
    q = hemi_q
    assert q.r_beta_upper == pytest.approx(4 ** (1 / 3), rel=1e-2)
    assert q.d_m <= q.r_beta <= q.r_beta_upper
    assert 0.99 <= q.r_beta <= 1.5875


def test_cap_60_volume(caps):
    s = caps[PI / 3]
    assert s.mesh.volume == pytest.approx(5 * PI / 24, rel=1e-2)
    assert non_collapsedness(s.mesh)[0] == pytest.approx(0.5, rel=1e-2)


def test_anisotropic_perimeter_identity(caps, arcs):
    # P_F = P - cos(theta) |T| holds exactly for piecewise-linear surfaces
    for s in list(caps.values()) + list(arcs.values()):
        m = s.mesh
        lhs = anisotropic_perimeter(m, s.g)
        assert lhs == pytest.approx(m.area - s.g.cos_theta * m.wetted_area, rel=1e-12)


def test_wetted_area_precheck(caps, arcs):
    for s in list(caps.values()) + list(arcs.values()):
        m = s.mesh
        flux = float(np.sum(m.element_measures * m.element_normals[:, -1]))
        assert flux == pytest.approx(m.wetted_area, rel=1e-2)


def test_d_m_positive_when_wetted():
    for spec in (cap(theta=0.4), PerturbationSpec(cap(), amplitude=0.1),
                 CompositeSpec((cap(), cap(center=(4, 0, 0))))):
        m = generate(spec, 3)
        assert m.wetted_area > 0
        assert non_collapsedness(m)[0] > 0


def test_extrinsic_diameter_two_caps():
    m = generate(CompositeSpec((cap(), cap(center=(4, 0, 0)))), 3)
    assert extrinsic_diameter(m) == pytest.approx(6.0, rel=1e-3)


def test_refinement_convergence():
    g = Gauge(PI / 3)
    exact_v = 5 * PI / 24
    exact_t = PI * 0.75
    errs = []
    for res in (2, 3, 4):
        m = generate(cap(theta=PI / 3), res)
        errs.append((abs(m.volume - exact_v), abs(m.wetted_area - exact_t),
                     abs(anisotropic_perimeter(m, g) - (PI - 0.5 * exact_t))))
    errs = np.array(errs)
    assert np.all(errs[1:] < errs[:-1])
    order = np.log2(errs[:-1] / errs[1:])
    assert np.all(order >= 1.0)


def test_beta0_validated(hemisphere):
    with pytest.raises(ValueError):
        region_quantities(hemisphere.mesh, hemisphere.g, beta0=1.5)
