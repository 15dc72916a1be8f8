import math

import numpy as np
import pytest

from robinspec import geometry as g
from robinspec import mesh


def test_shipped_meshes_valid(shipped, small_meshes):
    for name, m in small_meshes.items():
        m.validate()
        assert np.all(m.signed_areas() > 0), name
        assert m.area() == pytest.approx(shipped[name].area(), rel=2e-2), name
        assert m.boundary_length(mesh.ROBIN) == pytest.approx(shipped[name].perimeter, rel=1e-2), name
        assert m.min_angles().min() > math.radians(15), name


def test_uniform_refinement_keeps_curved_boundary():
    m = mesh.mesh_polygon(g.disk(), mesh.GradingPolicy(0.4))
    r = mesh.refine_uniform(mesh.refine_uniform(m))
    assert r.n_triangles == 16 * m.n_triangles
    b = np.unique(r.boundary_edges)
    assert np.linalg.norm(r.nodes[b], axis=1) == pytest.approx(1.0, abs=1e-12)
    assert r.area() > m.area()
    assert r.area() == pytest.approx(math.pi, rel=2e-3)


def test_refinement_preserves_angles():
    m = mesh.mesh_polygon(g.regular_polygon(6), mesh.GradingPolicy(0.3))
    r = mesh.refine_uniform(m)
    assert r.min_angles().min() == pytest.approx(m.min_angles().min(), rel=1e-9)
    assert r.h_max() == pytest.approx(0.5 * m.h_max(), rel=1e-9)


def test_corner_grading_reaches_small_cells():
    pol = mesh.GradingPolicy.for_gamma(20.0, 0.2, g.unit_square())
    m = mesh.mesh_polygon(g.unit_square(), pol)
    corner = np.array([0.0, 0.0])
    d = np.linalg.norm(m.nodes - corner, axis=1)
    near = m.edge_lengths()[np.any(np.isin(m.triangles, np.nonzero(d < 1e-12)[0]), axis=1)]
    assert near.max() <= 2.0 * pol.h_min
    assert pol.h_min <= 1.0 / (10 * 20.0)


def test_robin_mesh_layer_size():
    gam = 10.0
    m = mesh.robin_mesh(g.unit_square(), gam, 0.5 / gam, 3.0 / gam)
    c = m.nodes[m.triangles].mean(axis=1)
    dist = np.minimum.reduce([c[:, 0], c[:, 1], 1 - c[:, 0], 1 - c[:, 1]])
    # size h means legs <= h: hypotenuses up to sqrt(2) h, boundary edges <= h
    assert m.edge_lengths()[dist < 1.0 / gam].max() <= math.sqrt(2) * 0.5 / gam * (1 + 1e-9)
    b = m.nodes[m.boundary_edges]
    assert np.linalg.norm(b[:, 1] - b[:, 0], axis=1).max() <= 0.5 / gam * (1 + 1e-9)


def test_node_cap_enforced():
    with pytest.raises(mesh.MeshBudgetExceeded):
        mesh.robin_mesh(g.unit_square(), 50.0, 0.1 / 50, 3 / 50, node_cap=500)


def test_sector_mesh_area_and_tags():
    alpha, R = math.pi / 5, 3.0
    m = mesh.sector_mesh(alpha, R)
    m.validate()
    assert m.area() == pytest.approx(alpha * R * R, rel=1e-2)
    assert m.boundary_length(mesh.ROBIN) == pytest.approx(2 * R, rel=1e-12)
    assert m.boundary_length(mesh.DIRICHLET) == pytest.approx(2 * alpha * R, rel=1e-2)


def test_bad_policy():
    with pytest.raises(mesh.MeshError):
        mesh.GradingPolicy(0.0)
    with pytest.raises(mesh.MeshError):
        mesh.GradingPolicy(0.1, ratio=1.5)
    with pytest.raises(mesh.MeshError):
        mesh.sector_mesh(0.0, 1.0)


def test_permuted_mesh_same_geometry():
    m = mesh.mesh_polygon(g.unit_square(), mesh.GradingPolicy(0.3))
    perm = np.random.default_rng(1).permutation(m.n_nodes)
    p = m.permuted(perm)
    p.validate()
    assert p.area() == pytest.approx(m.area())
    assert p.boundary_length() == pytest.approx(m.boundary_length())
