import math

import numpy as np
import pytest
from scipy import integrate

from robinspec import fem, sector


def test_exact_ground_state_normalized_and_robin():
    for alpha in (math.pi / 6, math.pi / 4, 5 * math.pi / 12):
        t = math.tan(alpha)
        norm2, _ = integrate.dblquad(
            lambda y, x: sector.ground_state_function(alpha, [[x, y]])[0] ** 2,
            0, 60 * math.sin(alpha), lambda x: -x * t, lambda x: x * t, epsabs=1e-11)
        assert norm2 == pytest.approx(1.0, rel=1e-8)
        # d psi / d n = psi on the upper edge (outward normal (-sin, cos))
        s, c = math.sin(alpha), math.cos(alpha)
        p = np.array([1.0 * c, 1.0 * s])
        nrm = np.array([-s, c])
        eps = 1e-6
        f = lambda q: sector.ground_state_function(alpha, [q])[0]
        dn = (f(p) - f(p - eps * nrm)) / eps
        assert dn == pytest.approx(f(p), rel=1e-5)


def test_pi_over_4_ground_state_and_vector():
    spec = sector.sector_spectrum(math.pi / 4, refinements=1)
    assert spec.count == 1 and spec.count_stable
    E = spec.eigenvalues[0]
    assert E >= -2.0 - 1e-9
    assert E == pytest.approx(-2.0, rel=1e-4)
    # the stored eigenfunction matches the exact profile
    pts = np.array([[0.3, 0.1], [1.0, -0.5], [2.0, 0.0], [0.5, 0.49]])
    got = spec.evaluate(pts, 0)
    assert got == pytest.approx(sector.ground_state_function(math.pi / 4, pts), rel=2e-2)


def test_evaluate_domain_handling():
    spec = sector.sector_spectrum(math.pi / 4, refinements=1)
    with pytest.raises(sector.SectorError):
        spec.evaluate([[1.0, 1.5]])
    far = 2.5 * spec.truncation_radius
    assert spec.evaluate([[far, 0.0]])[0] == 0.0


def test_obtuse_sector_has_no_bound_states():
    spec = sector.sector_spectrum(2 * math.pi / 3)
    assert spec.count == 0 and math.isinf(spec.truncation_radius)


def test_truncation_monotone_in_radius(shipped):
    """Dirichlet truncation: eigenvalues decrease as R grows, for every shipped corner angle."""
    angles = sorted({round(v.half_angle, 12) for p in shipped.values() for v in p.convex_vertices})
    assert len(angles) >= 3
    for alpha in angles:
        E = []
        for R in (2.5, 4.0, 6.0):
            s = sector.sector_spectrum(alpha, R=R, refinements=1, vectors=False)
            E.append(s.eigenvalues[0])
        assert np.all(np.diff(E) < 0), alpha
        assert E[-1] >= sector.ground_state(alpha) - 1e-9, alpha


def test_scaling_identity():
    rep = sector.scaling_check(math.pi / 3, 7.0, n=1)
    assert rep.ok, rep.max_relative_error


def test_disk_cache_roundtrip(tmp_path):
    a = sector.sector_spectrum(math.pi / 3, refinements=0, cache_dir=tmp_path)
    sector.clear_cache()
    b = sector.sector_spectrum(math.pi / 3, refinements=0, cache_dir=tmp_path, vectors=False)
    assert b.eigenvalues == pytest.approx(a.eigenvalues, rel=0, abs=0)
    assert list(tmp_path.iterdir())


def test_model_sums_of_shipped_examples(shipped):
    sq = sector.build_model_sum(shipped["square"])
    assert sq.N_total == 4 and len(sq.clusters) == 1
    assert sq.clusters[0].value == pytest.approx(-2.0, rel=1e-4)
    hx = sector.build_model_sum(shipped["hexagon"])
    assert hx.N_total == 6 and hx.clusters[0].multiplicity == 6
    assert hx.clusters[0].value == pytest.approx(-4 / 3, rel=1e-4)
    assert sector.build_model_sum(shipped["lshape"]).N_total == 5
    arc = sector.build_model_sum(shipped["arcsquare"])
    vals = [c.value for c in arc.clusters]
    assert vals == pytest.approx([-2.0, sector.ground_state(math.radians(52.5))], rel=1e-4)
    assert sector.build_model_sum(shipped["disk"]).N_total == 0
    assert sq.cluster_of(1, 0) is sq.clusters[0]


def test_bad_arguments():
    with pytest.raises(ValueError):
        sector.sector_spectrum(0.0)
    with pytest.raises(ValueError):
        sector.sector_spectrum(0.5, tol=0.0)
    with pytest.raises(ValueError):
        sector.truncation_radius(-0.5)
