"""One-dimensional Robin model operators and the separable square.

All operators act as ``-f''`` on ``(0, l)`` with the attractive Robin
condition ``-f'(0) = gamma f(0)`` on the left. The right end carries

* ``RobinDirichlet``: ``f(l) = 0``
* ``RobinNeumann``: ``f'(l) = 0``
* ``RobinRobin``: ``f'(l) = beta f(l)``
* ``RobinRobinSymmetric``: ``f'(l) = gamma f(l)``

A negative eigenvalue ``E = -k**2`` satisfies, respectively,

    tanh(k l) = k / gamma
    tanh(k l) = gamma / k
    tanh(k l) = k (gamma + beta) / (k**2 + gamma beta)

The roots are computed from the equivalent exponential forms, e.g.
``(gamma - k) = (gamma + k) exp(-2 k l)``, which change sign exactly at
``k = gamma`` and so stay bracketed even when two roots are exponentially
close.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

KINDS = ("RobinDirichlet", "RobinNeumann", "RobinRobin", "RobinRobinSymmetric")

_XTOL = 1e-300
_RTOL = 1e-14


@dataclass(frozen=True)
class Secular1D:
    kind: str
    gamma: float
    l: float
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if not self.l > 0:
            raise ValueError("interval length must be positive")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if self.kind == "RobinRobin" and not self.beta > 0:
            raise ValueError("RobinRobin needs beta > 0")

    @property
    def right_beta(self) -> float | None:
        """Robin parameter at ``x = l``; None for Dirichlet, 0 for Neumann."""
        return {"RobinDirichlet": None, "RobinNeumann": 0.0,
                "RobinRobin": self.beta, "RobinRobinSymmetric": self.gamma}[self.kind]


def _root(f, a, b):
    return brentq(f, a, b, xtol=_XTOL, rtol=_RTOL, maxiter=500)


def _k_roots(op: Secular1D) -> list[float]:
    g, l = op.gamma, op.l
    e = lambda k: np.exp(-2.0 * k * l)
    if op.kind == "RobinDirichlet":
        if g * l <= 1.0:
            return []
        f = lambda k: (g - k) - (g + k) * e(k)
        lo = _positive_start(f, g)
        return [] if lo is None else [_root(f, lo, g)]
    if op.kind == "RobinNeumann":
        f = lambda k: (k - g) - (k + g) * e(k)
        return [_root(f, g, g + 1.0 + 10.0 / l)]
    b = op.right_beta
    lo_p, hi_p = min(g, b), max(g, b)
    f = lambda k: (k - g) * (k - b) - (k + g) * (k + b) * e(k)
    roots = [_root(f, hi_p, g + b + 10.0 / l)]
    # f(0) = 0 and f < 0 on [lo_p, hi_p]; a second root below lo_p exists
    # exactly when f'(0) = 2(l g b - g - b) > 0
    if l * g * b > g + b:
        start = _positive_start(f, lo_p)
        if start is not None:
            roots.append(_root(f, start, lo_p))
    return sorted(roots)


def _positive_start(f, upper):
    """A small k > 0 with f(k) > 0, given f(0) = 0 and f'(0) > 0."""
    k = 1e-3 * upper
    while k > 1e-12 * upper:
        if f(k) > 0:
            return k
        k *= 0.1
    return None


def negative_eigenvalues(op: Secular1D) -> list[float]:
    """All negative eigenvalues, ascending."""
    return sorted(-k * k for k in _k_roots(op))


def fd_matrix(op: Secular1D, grid_n: int):
    """Symmetrized second-order finite-difference matrix (diagonal, offdiagonal).

    Robin and Neumann ends use a ghost node with the centred derivative,
    which keeps second order and a symmetrizable tridiagonal matrix.
    """
    if grid_n < 100:
        raise ValueError("grid_n must be at least 100")
    h = op.l / grid_n
    bR = op.right_beta
    n = grid_n if bR is None else grid_n + 1
    d = np.full(n, 2.0)
    off = np.full(n - 1, -1.0)
    d[0] = 2.0 - 2.0 * h * op.gamma
    off[0] = -np.sqrt(2.0)
    if bR is not None:
        d[-1] = 2.0 - 2.0 * h * bR
        off[-1] = -np.sqrt(2.0)
    return d / h**2, off / h**2


def fd_oracle_1d(op: Secular1D, grid_n: int = 4000, count: int = 5) -> np.ndarray:
    """Lowest ``count`` eigenvalues of the finite-difference discretization."""
    d, off = fd_matrix(op, grid_n)
    return eigh_tridiagonal(d, off, eigvals_only=True, select="i", select_range=(0, count - 1))


def two_term_expansion(gamma: float, l: float) -> float:
    """Two-term asymptotics of the Robin-Dirichlet ground state."""
    return -gamma**2 + 4.0 * gamma**2 * np.exp(-2.0 * gamma * l)


def robin_robin_bracket(gamma: float, beta: float, l: float) -> tuple[float, float]:
    """Open interval that contains the lowest Robin-Robin eigenvalue when gamma > 2 beta, gamma l > 1."""
    return -gamma**2 - 123.0 * gamma**2 * np.exp(-2.0 * gamma * l), -gamma**2


# separable square -----------------------------------------------------------


def _trig_roots(c: float, tmax: float) -> list[float]:
    """Positive roots t <= tmax of the even/odd nonnegative-energy equations.

    even: tan t = -c / t on (j pi - pi/2, j pi)
    odd:  tan t = t / c  on (j pi, j pi + pi/2)
    """
    out = []
    eps = 1e-14
    j = 1
    while (j - 0.5) * np.pi <= tmax:
        a, b = (j - 0.5) * np.pi, j * np.pi
        f = lambda t: np.sin(t) * t + c * np.cos(t)
        out.append(_root(f, a + eps, b))
        a, b = j * np.pi, (j + 0.5) * np.pi
        f = lambda t: np.sin(t) * c - t * np.cos(t)
        out.append(_root(f, a, b - eps))
        j += 1
    return [t for t in out if t <= tmax]


def square_spectrum_1d(gamma: float, side: float, emax: float | None = None,
                       count: int | None = None) -> np.ndarray:
    """Eigenvalues of ``-f''`` on ``(0, side)`` with attractive Robin ends.

    Returns either all eigenvalues up to ``emax`` or at least the lowest
    ``count`` (exactly ``count`` when given alone).
    """
    if not gamma * side > 2.0:
        raise ValueError("the separable oracle needs gamma * side > 2")
    half = side / 2.0
    neg = negative_eigenvalues(Secular1D("RobinNeumann", gamma, half))
    neg += negative_eigenvalues(Secular1D("RobinDirichlet", gamma, half))
    c = gamma * half
    if emax is None:
        tmax = (count + 2) * np.pi
    else:
        tmax = half * np.sqrt(max(emax, 0.0)) + np.pi
    vals = np.sort(np.concatenate([neg, (np.array(_trig_roots(c, tmax)) / half) ** 2]))
    if emax is not None:
        vals = vals[vals <= emax]
    if count is not None and emax is None:
        vals = vals[:count]
    return vals


def square_oracle(gamma: float, side: float, n: int) -> np.ndarray:
    """The ``n`` smallest eigenvalues of the Robin Laplacian on a square."""
    e = square_spectrum_1d(gamma, side, count=n + 1)
    sums = np.sort((e[:, None] + e[None, :]).ravel())
    return sums[:n]


def square_count_below(gamma: float, side: float, threshold: float) -> int:
    """Number of square eigenvalues strictly below ``threshold``."""
    e0 = square_spectrum_1d(gamma, side, count=1)[0]
    e = square_spectrum_1d(gamma, side, emax=threshold - e0)
    return int(np.count_nonzero((e[:, None] + e[None, :]) < threshold))
