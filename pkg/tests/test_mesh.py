import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gradstate.mesh import (
    Mesh,
    MeshError,
    build_disk_mesh,
    check_mesh,
    hexagon_fan,
    mesh_edges,
    mesh_size,
    min_angle,
    refine,
    signed_areas,
)


def area_sum(mesh):
    # shoelace per triangle, written independently of signed_areas
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    return 0.5 * np.sum(x * np.roll(y, -1, axis=1) - np.roll(x, -1, axis=1) * y)


def test_unit_fan_counts():
    m = build_disk_mesh(1.0, 0)
    assert (m.n_nodes, m.n_triangles, int(m.boundary_mask.sum())) == (7, 6, 6)


def test_radius_two_boundary_distance():
    m = build_disk_mesh(2.0, 0)
    r = np.linalg.norm(m.nodes[m.boundary_mask], axis=1)
    np.testing.assert_allclose(r, 2.0, rtol=0, atol=1e-15)


def test_level2_area_band():
    a = area_sum(build_disk_mesh(1.0, 2))
    assert np.pi - 0.3 < a < np.pi


def test_refine_splits_into_four():
    fan = hexagon_fan(1.0)
    fine = refine(fan)
    assert fine.n_triangles == 24
    assert fine.boundary_mask.sum() == 2 * fan.boundary_mask.sum()


def test_refine_halves_size_from_level_one():
    hs = [mesh_size(build_disk_mesh(1.0, k)) for k in range(6)]
    # the first step moves a rim midpoint by 1 - cos(pi/6) = 0.134 against edges of 1/2
    assert hs[1] / hs[0] == pytest.approx(0.6197, abs=1e-4)
    for k in range(1, 5):
        assert abs(hs[k + 1] / hs[k] - 0.5) <= 0.05


def test_mesh_size_right_triangle():
    m = Mesh(np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]), np.array([[0, 1, 2]]),
             np.array([True, True, True]), 0, 1.0)
    assert mesh_size(m) == pytest.approx(np.sqrt(2.0))


def test_unit_fan_size():
    edges = edge_len_oracle(hexagon_fan(1.0))
    assert mesh_size(hexagon_fan(1.0)) == pytest.approx(edges.max())
    assert edges.max() == pytest.approx(1.0)


def edge_len_oracle(mesh):
    edges, _, _ = mesh_edges(mesh.triangles)
    return np.hypot(*(mesh.nodes[edges[:, 0]] - mesh.nodes[edges[:, 1]]).T)


def test_size_decreases():
    m = build_disk_mesh(1.0, 2)
    assert mesh_size(refine(m)) < mesh_size(m)


@pytest.mark.parametrize("level", range(6))
def test_invariants_hold_after_refinement(level):
    m = build_disk_mesh(1.5, level)
    check_mesh(m)
    assert min_angle(m) >= 20.0


@pytest.mark.parametrize("level", range(5))
def test_node_count_recurrence(level):
    m = build_disk_mesh(1.0, level)
    n_edges = mesh_edges(m.triangles)[0].shape[0]
    assert refine(m).n_nodes == m.n_nodes + n_edges


def test_conforming_edges():
    m = build_disk_mesh(1.0, 3)
    _, _, counts = mesh_edges(m.triangles)
    assert set(np.unique(counts)) <= {1, 2}


def test_deterministic_numbering():
    a, b = build_disk_mesh(1.0, 3), build_disk_mesh(1.0, 3)
    assert np.array_equal(a.nodes, b.nodes) and np.array_equal(a.triangles, b.triangles)


@settings(max_examples=20, deadline=None)
@given(radius=st.floats(0.1, 10.0), level=st.integers(0, 4))
def test_area_defect_quadratic(radius, level):
    m = build_disk_mesh(radius, level)
    h = mesh_size(m)
    total = signed_areas(m.nodes, m.triangles).sum()
    assert total <= np.pi * radius**2 * (1 + 1e-12)
    assert total >= np.pi * radius**2 - 2.0 * h**2


def test_rejects_bad_input():
    with pytest.raises(MeshError):
        build_disk_mesh(-1.0, 1)
    with pytest.raises(MeshError):
        build_disk_mesh(1.0, 3, max_level=2)
    with pytest.raises(MeshError):
        refine(build_disk_mesh(1.0, 2), max_level=2)


def test_check_mesh_flags_flipped_triangle():
    m = build_disk_mesh(1.0, 1)
    tris = m.triangles.copy()
    tris[3] = tris[3][::-1]
    with pytest.raises(MeshError, match="triangle 3"):
        check_mesh(Mesh(m.nodes, tris, m.boundary_mask, 1, 1.0))
