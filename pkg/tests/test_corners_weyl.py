import math

import numpy as np
import pytest

from robinspec import corners, geometry as g, mesh, model1d, weyl
from oracles import disk_robin_count


def test_linear_fit_exact_line():
    a, b, r2 = corners.linear_fit([1, 2, 3, 4], [3, 5, 7, 9])
    assert (a, b, r2) == pytest.approx((2.0, 1.0, 1.0))


def test_rate_fit_kinds():
    gam = np.array([6.0, 8.0, 10.0])
    exp_fit = corners.rate_fit(gam, 5 * np.exp(-1.5 * gam), straight=True)
    assert exp_fit.kind == "exponential" and exp_fit.slope == pytest.approx(-1.5)
    pow_fit = corners.rate_fit(gam, gam ** -0.5, straight=False)
    assert pow_fit.kind == "power" and pow_fit.slope == pytest.approx(-0.5)
    with pytest.raises(ValueError, match="need >= 3 sweep points"):
        corners.rate_fit([1.0, 2.0], [1.0, 2.0], True)


def test_stabilized_lowest_square_matches_oracle():
    sol = corners.stabilized_lowest(g.unit_square(), 6.0, 4, rtol=1e-6, hint=-72.0)
    assert sol.stabilized
    ref = model1d.square_oracle(6.0, 1.0, 4)
    assert sol.result.eigenvalues == pytest.approx(ref, rel=1e-5)
    assert np.all(sol.result.eigenvalues >= ref - 1e-9)


def test_corner_report_without_corners():
    rep = corners.corner_report(g.disk(), 10.0)
    assert rep.rows == [] and "N_total=0" in rep.note


def test_predictions():
    assert weyl.bulk_prediction(g.unit_square(), -0.5, 10.0) == pytest.approx(40 * math.sqrt(0.5) / math.pi)
    assert weyl.edge_prediction(g.disk(), 2.0, 100.0) == pytest.approx(2 * math.sqrt(3) * 10)
    assert weyl.edge_prediction(g.unit_square(), 4.0, 25.0) == pytest.approx(5 * 8 / math.pi)


@pytest.mark.parametrize("gamma, E", [(5.0, -0.5), (8.0, -0.3), (8.0, -0.9)])
def test_stabilized_count_square_equals_oracle(gamma, E):
    r = weyl.stabilized_count(g.unit_square(), gamma, E * gamma**2)
    assert r.stabilized
    assert r.count == model1d.square_count_below(gamma, 1.0, E * gamma**2)
    assert r.history[-1][2] == r.history[-2][2]


def test_stabilized_count_disk_equals_bessel():
    gamma = 12.0
    t = -gamma**2 + 2 * gamma
    r = weyl.stabilized_count(g.disk(), gamma, t)
    assert r.stabilized and r.count == disk_robin_count(gamma, t)


def test_count_budget():
    with pytest.raises(mesh.MeshBudgetExceeded):
        weyl.stabilized_count(g.unit_square(), 40.0, -800.0, node_cap=2000)
    r = weyl.stabilized_count(g.unit_square(), 5.0, -12.5, node_cap=5000)
    assert r.mesh_nodes <= 5000 and len(r.history) <= 2


def test_report_exponent():
    rows = [weyl.WeylRow("bulk", gm, 0, int(c), 0, 0, 0, True) for gm, c in [(10, 10), (20, 20), (40, 40)]]
    assert weyl.WeylReport("bulk", -0.5, rows).fitted_exponent() == pytest.approx(1.0)
    with pytest.raises(ValueError):
        weyl.weyl_bulk(g.unit_square(), 0.5, [10])
    with pytest.raises(ValueError):
        weyl.tail_bracket(g.unit_square(), 0, [10])
