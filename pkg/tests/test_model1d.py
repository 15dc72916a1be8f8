import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from robinspec import model1d as m1
from oracles import rd_fd_dense


def test_robin_dirichlet_reference_value():
    (E,) = m1.negative_eigenvalues(m1.Secular1D("RobinDirichlet", 5.0, 1.0))
    assert E == pytest.approx(-24.99545629, abs=1e-8)
    # independent P1 finite element pencil
    assert rd_fd_dense(5.0, 1.0, 2000)[0] == pytest.approx(E, rel=1e-5)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.2, 30.0), st.floats(0.2, 3.0))
def test_roots_solve_hyperbolic_forms(gamma, l):
    for kind, resid in [
        ("RobinDirichlet", lambda k: k - gamma * math.tanh(k * l)),
        ("RobinNeumann", lambda k: k * math.tanh(k * l) - gamma),
    ]:
        for E in m1.negative_eigenvalues(m1.Secular1D(kind, gamma, l)):
            k = math.sqrt(-E)
            assert abs(resid(k)) <= 1e-9 * max(gamma, 1.0)


@settings(max_examples=60, deadline=None)
@given(st.floats(1.2, 30.0), st.floats(0.2, 3.0))
def test_ordering_around_minus_gamma_squared(gamma, l):
    rd = m1.negative_eigenvalues(m1.Secular1D("RobinDirichlet", gamma, l))
    rn = m1.negative_eigenvalues(m1.Secular1D("RobinNeumann", gamma, l))
    assert len(rn) == 1 and rn[0] <= -gamma**2
    if gamma * l > 1:
        assert len(rd) == 1 and -gamma**2 <= rd[0] < 0
    else:
        assert rd == []


@settings(max_examples=40, deadline=None)
@given(st.floats(1.0, 10.0), st.floats(0.1, 5.0), st.floats(0.3, 3.0))
def test_robin_robin_roots(gamma, beta, l):
    op = m1.Secular1D("RobinRobin", gamma, l, beta)
    roots = m1.negative_eigenvalues(op)
    expected = 2 if l * gamma * beta > gamma + beta else 1
    assert len(roots) == expected
    for E in roots:
        k = math.sqrt(-E)
        assert math.tanh(k * l) == pytest.approx(k * (gamma + beta) / (k * k + gamma * beta), rel=1e-9)
    assert roots[0] <= -max(gamma, beta) ** 2


def test_fd_oracle_converges_quadratically():
    op = m1.Secular1D("RobinRobin", 3.0, 1.0, 2.0)
    exact = m1.negative_eigenvalues(op)[0]
    e1 = abs(m1.fd_oracle_1d(op, 500, 1)[0] - exact)
    e2 = abs(m1.fd_oracle_1d(op, 1000, 1)[0] - exact)
    assert 3.5 < e1 / e2 < 4.5


def test_fd_matrix_is_symmetric_tridiagonal():
    d, off = m1.fd_matrix(m1.Secular1D("RobinNeumann", 2.0, 1.0), 120)
    assert len(off) == len(d) - 1
    A = np.diag(d) + np.diag(off, 1) + np.diag(off, -1)
    assert np.allclose(A, A.T)


def test_robin_robin_bracket_grid():
    for gamma in (4.0, 6.0, 8.0):
        for l in (0.5, 1.0):
            beta = 1.0
            (lo, hi) = m1.robin_robin_bracket(gamma, beta, l)
            E1 = m1.negative_eigenvalues(m1.Secular1D("RobinRobin", gamma, l, beta))[0]
            assert lo < E1 < hi


def test_two_term_remainder_is_higher_order():
    r = []
    for gamma in (3.0, 4.0, 5.0, 6.0):
        (E,) = m1.negative_eigenvalues(m1.Secular1D("RobinDirichlet", gamma, 1.0))
        r.append(abs(E - m1.two_term_expansion(gamma, 1.0)) / (gamma**2 * math.exp(-2 * gamma)))
    # remainder relative to the correction term decays
    assert np.all(np.diff(r) < 0)


def test_square_spectrum_1d_matches_symmetric_robin_fd():
    gamma, side = 6.0, 1.0
    e = m1.square_spectrum_1d(gamma, side, count=6)
    fd = m1.fd_oracle_1d(m1.Secular1D("RobinRobinSymmetric", gamma, side), 4000, 6)
    assert e == pytest.approx(fd, rel=1e-4, abs=1e-3)


def test_square_oracle_and_count_consistent():
    gamma = 10.0
    vals = m1.square_oracle(gamma, 1.0, 12)
    for t in np.linspace(vals[0] - 1, vals[-1] - 1e-6, 25):
        assert m1.square_count_below(gamma, 1.0, t) == np.count_nonzero(vals < t)
    # the lowest cluster: four values near -2 gamma^2, a double middle one
    assert vals[1] == pytest.approx(vals[2], rel=1e-14)
    assert vals[:4] == pytest.approx(-2 * gamma**2, rel=1e-3)


def test_invalid_operators():
    with pytest.raises(ValueError):
        m1.Secular1D("Dirichlet", 1.0, 1.0)
    with pytest.raises(ValueError):
        m1.Secular1D("RobinRobin", 1.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        m1.square_spectrum_1d(1.0, 1.0, count=3)
