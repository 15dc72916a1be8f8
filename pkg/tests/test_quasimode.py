import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robinspec import eig, fem, geometry as g, mesh, quasimode as qm, sector

GAMMA = 10.0


@pytest.fixture(scope="module")
def setups(shipped):
    out = {}
    for name, poly in shipped.items():
        m = mesh.robin_mesh(poly, GAMMA, 0.5 / GAMMA, 3.0 / GAMMA)
        pen = fem.assemble(m, 2)
        out[name] = (poly, pen, sector.build_model_sum(poly))
    return out


def test_smoothstep_profile():
    t = np.linspace(0, 3, 301)
    s = qm.smoothstep(t)
    assert np.all(s[t <= 1] == 1.0) and np.all(s[t >= 2] == 0.0)
    assert np.all(np.diff(s) <= 0)
    h = 1e-6
    for x in (1.0, 2.0):  # C1 at the joints
        assert (qm.smoothstep(x + h) - qm.smoothstep(x - h)) / (2 * h) == pytest.approx(0.0, abs=1e-5)


def test_rayleigh_above_ground_state_for_all_quasimodes(setups):
    seen = 0
    for name, (poly, pen, model) in setups.items():
        if model.N_total == 0:
            continue
        E1 = eig.solve_lowest(pen, GAMMA, 1).eigenvalues[0]
        for v, spec in model.per_vertex.items():
            for n in range(1, spec.count + 1):
                q = qm.build_quasimode(poly, pen, model, v, n, GAMMA)
                rq = fem.rayleigh(pen, GAMMA, q.dof_vector)
                assert rq >= E1 - 1e-9 * abs(E1), (name, v, n)
                assert rq == pytest.approx(q.lambda_target, rel=2e-2), (name, v, n)
                seen += 1
    assert seen >= 4 + 6 + 5 + 4


def test_quasimodes_nearly_orthonormal(setups):
    poly, pen, model = setups["square"]
    qms = qm.build_cluster(poly, pen, model, model.clusters[0], GAMMA)
    G = qm.gramian([q.dof_vector for q in qms], pen.M)
    # disjoint supports: exactly orthogonal; the cutoff removes mass beyond the
    # inner radius, where the profile has decayed by exp(-4.5) in L2 at gamma = 10
    assert np.abs(G - np.diag(np.diag(G))).max() == 0.0
    assert np.all(np.diag(G) <= 1.0 + 1e-6)
    assert np.all(np.diag(G) >= 1.0 - math.exp(-4.5))


def test_disjointness_enforced():
    with pytest.raises(qm.QuasiModeError):
        qm.check_disjoint(g.unit_square(), 0.3)
    qm.check_disjoint(g.unit_square(), 0.25)
    assert qm.cutoff_radius(g.unit_square(), 10.0) == pytest.approx(0.25)
    assert qm.cutoff_radius(g.arc_square(), 27.0) == pytest.approx(27.0 ** (-2 / 3))


def test_subspace_distance_properties(setups, rng):
    for name, (poly, pen, model) in setups.items():
        M = pen.M
        F = rng.standard_normal((pen.dim, 3))
        assert qm.subspace_distance(F, F, M) == pytest.approx(0.0, abs=1e-7), name
        # a reparametrized basis spans the same space
        assert qm.subspace_distance(F @ rng.standard_normal((3, 3)), F, M) < 1e-6, name
        E = rng.standard_normal((pen.dim, 4))
        d = qm.subspace_distance(F, E, M)
        assert 0.0 <= d <= 1.0, name
        assert qm.subspace_distance(E, F, M) == 1.0  # dim F < dim E direction
        assert qm.subspace_distance(F[:, :2], np.column_stack([F, E]), M) < 1e-6


def test_certificate_of_exact_eigenvectors_is_tight():
    m = mesh.mesh_polygon(g.unit_square(), mesh.GradingPolicy(0.2))
    pen = fem.assemble(m, 1)
    res = eig.solve_dense(pen, 5.0, 3)
    c = qm.certify(list(res.eigenvectors[:, 1:3].T), pen, 5.0, lam=res.eigenvalues[1])
    assert c.orthonormal and c.n == 2
    assert c.eta < 1e-8
    assert c.halfwidth == pytest.approx(math.sqrt(2) * c.eta)
    c.verify(pen, 5.0)
    assert c.sound


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 4), st.floats(1e-3, 0.3), st.integers(0, 2**31 - 1))
def test_certificate_always_sound(n, noise, seed):
    """The certified interval contains at least n eigenvalues for any independent family."""
    r = np.random.default_rng(seed)
    m = mesh.mesh_polygon(g.regular_polygon(6), mesh.GradingPolicy(0.35))
    pen = fem.assemble(m, 1)
    res = eig.solve_dense(pen, 4.0)
    k = r.integers(0, 6)
    X = res.eigenvectors[:, k:k + n] + noise * r.standard_normal((pen.dim, n))
    c = qm.certify(list(X.T), pen, 4.0, lam=float(np.mean(res.eigenvalues[k:k + n])))
    c.verify(pen, 4.0)
    assert c.sound


def test_certificate_rejects_dependent_family():
    m = mesh.mesh_polygon(g.unit_square(), mesh.GradingPolicy(0.3))
    pen = fem.assemble(m, 1)
    x = np.ones(pen.dim)
    with pytest.raises(qm.CertificateError):
        qm.certify([x, 2 * x], pen, 1.0, lam=0.0)
    with pytest.raises(qm.CertificateError):
        qm.certify([], pen, 1.0)


def test_certificate_json_keys():
    c = qm.Certificate(-200.0, 4, 0.1, 0.9, 1.1, 0.9, False, 4)
    d = c.to_dict()
    assert d["lambda"] == -200.0 and "lam" not in d
    assert '"verified_count": 4' in c.to_json()
    assert c.claim.startswith(">= 4 eigenvalues")
