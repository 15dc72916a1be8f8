import numpy as np
import pytest

from robinspec import geometry as g, mesh, mesh_io


def _square():
    return mesh.mesh_polygon(g.unit_square(), mesh.GradingPolicy(0.3))


def test_roundtrip_is_byte_identical(tmp_path, small_meshes):
    for name, m in small_meshes.items():
        files = mesh_io.export_mesh(m, tmp_path / name)
        back = mesh_io.import_mesh(tmp_path / f"{name}.node")
        assert np.array_equal(back.nodes, m.nodes)
        assert np.array_equal(back.triangles, m.triangles)
        assert np.array_equal(back.boundary_tags, m.boundary_tags)
        again = mesh_io.export_mesh(back, tmp_path / f"{name}_2")
        for a, b in zip(files, again):
            assert a.read_bytes() == b.read_bytes()


def test_zero_based_and_clockwise(tmp_path):
    (tmp_path / "t.node").write_text("4 2 0 0\n0 0 0\n1 1 0\n2 1 1\n3 0 1\n")
    (tmp_path / "t.ele").write_text("2 3 0\n0 0 2 1\n1 0 3 2\n")  # both clockwise
    m = mesh_io.import_mesh(tmp_path / "t")
    assert np.all(m.signed_areas() > 0)
    assert m.area() == pytest.approx(1.0)
    assert m.boundary_length(mesh.ROBIN) == pytest.approx(4.0)


def test_dirichlet_tags_from_poly(tmp_path):
    m = _square()
    tags = np.where(m.nodes[m.boundary_edges].mean(axis=1)[:, 0] < 1e-12, mesh.DIRICHLET, mesh.ROBIN)
    m2 = mesh.TriMesh(m.nodes, m.triangles, m.boundary_edges, tags)
    mesh_io.export_mesh(m2, tmp_path / "d")
    back = mesh_io.import_mesh(tmp_path / "d.ele")
    assert back.boundary_length(mesh.DIRICHLET) == pytest.approx(1.0)
    assert back.boundary_length(mesh.ROBIN) == pytest.approx(3.0)


@pytest.mark.parametrize("node, ele, msg", [
    ("3 2 0 0\n1 0 0\n2 1 0\n3 0 1\n", "1 3 0\n1 1 2 4\n", "missing node"),
    ("3 2 0 1\n1 0 0 3\n2 1 0 1\n3 0 1 1\n", "1 3 0\n1 1 2 3\n", "unknown boundary tag 3"),
    ("3 2 0 0\n1 0 0\n2 1 0\n", "1 3 0\n1 1 2 3\n", "expected 3 nodes"),
    ("3 2 0 0\n1 0 0\n2 1 0\n3 2 0\n", "1 3 0\n1 1 2 3\n", "degenerate"),
    ("3 2 0 0\n1 0 0\n2 1 0\n3 0 1\n", "1 6 0\n1 1 2 3 4 5 6\n", "3-node"),
    ("3 3 0 0\n1 0 0 0\n2 1 0 0\n3 0 1 0\n", "1 3 0\n1 1 2 3\n", "2-D"),
    ("3 2 0 0\n1 0 0\n2 1 0\n3 0 x\n", "1 3 0\n1 1 2 3\n", "malformed"),
])
def test_malformed_files(tmp_path, node, ele, msg):
    (tmp_path / "b.node").write_text(node)
    (tmp_path / "b.ele").write_text(ele)
    with pytest.raises(mesh_io.MeshFormatError, match=msg):
        mesh_io.import_mesh(tmp_path / "b")


def test_missing_file(tmp_path):
    with pytest.raises(mesh_io.MeshFormatError, match="cannot read"):
        mesh_io.import_mesh(tmp_path / "nothing")
