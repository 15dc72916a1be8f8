import numpy as np
import pytest

from robinspec import cli, fem, mesh

SHIPPED = cli.SHIPPED


@pytest.fixture(scope="session")
def shipped():
    return {name: cli.load_polygon(name) for name in SHIPPED}


@pytest.fixture(scope="session")
def small_meshes(shipped):
    """Coarse meshes of every shipped example, small enough for dense checks."""
    out = {}
    for name, poly in shipped.items():
        out[name] = mesh.mesh_polygon(poly, mesh.GradingPolicy(0.35))
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def square_mesh(h=0.25, order=1):
    from robinspec import geometry
    m = mesh.mesh_polygon(geometry.unit_square(), mesh.GradingPolicy(h))
    return m, fem.assemble(m, order)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(RESULTS):
        ok, detail = RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
