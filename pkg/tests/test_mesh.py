import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from caplab.mesh import MeshError, build_mesh, load_mesh, merge_meshes, save_mesh
from caplab.shapes import CompositeSpec, cap, generate

PI = math.pi

PYRAMID_V = np.array([[1, 0, 0], [0, 1, 0], [-1, 0, 0], [0, -1, 0], [0, 0, 1]], dtype=float)
PYRAMID_T = np.array([[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]])


def pyramid(**kw):
    kw.setdefault("max_corner_deg", None)
    return build_mesh(PYRAMID_V, PYRAMID_T, **kw)


def test_pyramid_quantities():
    m = pyramid()
    assert m.volume == pytest.approx(2 / 3, rel=1e-14)
    assert m.wetted_area == pytest.approx(2.0, rel=1e-14)
    assert m.area == pytest.approx(4 * 0.5 * math.sqrt(2) * math.sqrt(1.5), rel=1e-14)
    assert sorted(m.boundary_vertices.tolist()) == [0, 1, 2, 3]
    assert len(m.boundary_loops) == 1
    assert m.flipped_components == ()


def test_inverted_orientation_is_flipped_outward():
    m = build_mesh(PYRAMID_V, PYRAMID_T[:, ::-1], max_corner_deg=None)
    assert m.flipped_components == (0,)
    assert m.volume == pytest.approx(2 / 3)


def test_contains():
    m = pyramid()
    pts = np.array([[0, 0, 0.3], [0.4, 0.4, 0.1], [0.6, 0.6, 0.1], [0, 0, 1.2], [0.1, 0.1, -0.1]])
    assert m.contains(pts).tolist() == [True, True, False, False, False]


def test_below_hyperplane_rejected():
    v = PYRAMID_V.copy()
    v[4, 2] = -0.1
    with pytest.raises(MeshError, match="below hyperplane") as err:
        build_mesh(v, PYRAMID_T, max_corner_deg=None)
    assert err.value.kind == "below-hyperplane"


def test_boundary_off_plane_rejected():
    v = PYRAMID_V.copy()
    v[0, 2] = 0.5
    with pytest.raises(MeshError) as err:
        build_mesh(v, PYRAMID_T, max_corner_deg=None)
    assert err.value.kind == "boundary-off-plane"


def test_inconsistent_orientation_rejected():
    t = PYRAMID_T.copy()
    t[0] = t[0][::-1]
    with pytest.raises(MeshError) as err:
        build_mesh(PYRAMID_V, t, max_corner_deg=None)
    assert err.value.kind == "orientation"


def test_non_manifold_rejected():
    v = np.vstack([PYRAMID_V, [[0.5, 0.5, 2.0]]])
    t = np.vstack([PYRAMID_T, [[0, 4, 5]]])
    with pytest.raises(MeshError) as err:
        build_mesh(v, t, max_corner_deg=None)
    assert err.value.kind == "non-manifold"


def test_corner_limit():
    with pytest.raises(MeshError) as err:
        build_mesh(PYRAMID_V, PYRAMID_T)
    assert err.value.kind == "corner"


def test_snapping():
    v = PYRAMID_V.copy()
    v[0, 2] = 1e-12
    m = build_mesh(v, PYRAMID_T, max_corner_deg=None)
    assert m.vertices[0, 2] == 0.0


def test_unreadable(tmp_path):
    with pytest.raises(MeshError) as err:
        load_mesh(tmp_path / "missing.off")
    assert err.value.kind == "unreadable"
    bad = tmp_path / "bad.off"
    bad.write_text("PLY\n")
    with pytest.raises(MeshError):
        load_mesh(bad)


@pytest.mark.parametrize("theta", [PI / 3, PI / 2, 2 * PI / 3])
def test_off_round_trip_bit_exact(tmp_path, theta):
    m = generate(cap(theta=theta), 3)
    path = tmp_path / "cap.off"
    save_mesh(m, path)
    back = load_mesh(path)
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(back.elements, m.elements)


def test_csv_round_trip_bit_exact(tmp_path):
    m = generate(CompositeSpec((cap(theta=PI / 3, dimension=1), cap(center=(5, 0), theta=PI / 3, dimension=1))), 3)
    path = tmp_path / "arc.csv"
    save_mesh(m, path)
    back = load_mesh(path)
    assert back.dimension == 1
    assert back.n_components == 2
    assert back.volume == pytest.approx(m.volume, rel=1e-14)
    assert np.array_equal(np.sort(back.vertices, axis=0), np.sort(m.vertices, axis=0))


def test_two_components_labels():
    m = generate(CompositeSpec((cap(), cap(center=(4, 0, 0)))), 2)
    assert set(m.component_labels.tolist()) == {0, 1}
    assert len(m.boundary_loops) == 2


def test_merge_meshes():
    a = generate(cap(), 2)
    b = generate(cap(center=(5, 0, 0)), 2)
    m = merge_meshes([a, b])
    assert m.volume == pytest.approx(a.volume + b.volume)


def test_wetted_area_not_above_area():
    for th in (0.3, PI / 3, PI / 2, 2 * PI / 3, 2.8):
        m = generate(cap(theta=th), 3)
        assert m.wetted_area <= m.area + 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(0.2, PI - 0.2), st.floats(0.3, 3.0))
def test_scaled_cap_volume(theta, radius):
    m = generate(cap(theta=theta, radius=radius), 2)
    m1 = generate(cap(theta=theta), 2)
    assert m.volume == pytest.approx(m1.volume * radius ** 3, rel=1e-10)


def test_hemisphere_contains_matches_ball(rng):
    m = generate(cap(), 4)
    pts = rng.uniform([-1.1, -1.1, 0.0], [1.1, 1.1, 1.1], (20000, 3))
    r = np.linalg.norm(pts, axis=1)
    inside = m.contains(pts)
    clear = np.abs(r - 1.0) > 0.01
    assert np.array_equal(inside[clear], (r < 1.0)[clear])
