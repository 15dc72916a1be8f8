"""Lowest eigenpairs and exact eigenvalue counts for the pencil ``(K - gamma B, M)``.

Counting uses Sylvester's law of inertia: the number of eigenvalues below
``t`` equals the number of negative pivots in a symmetric factorization of
``K - gamma B - t M``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import SpectralPencil

log = logging.getLogger(__name__)

DENSE_MAX = 2000
PIVOT_TOL = 1e-12


class EigenSolverError(RuntimeError):
    pass


class FactorizationError(EigenSolverError):
    pass


@dataclass
class EigenResult:
    gamma: float
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    shift: float | None = None


@dataclass(frozen=True)
class Inertia:
    """Signature of ``K - gamma B - threshold M`` at the threshold actually used."""

    negative: int
    zero: int
    positive: int
    threshold: float
    requested: float
    retries: int

    @property
    def perturbed(self) -> bool:
        return self.threshold != self.requested


def _dense_inertia(A: np.ndarray):
    lu, d, perm = sla.ldl(A, lower=True, hermitian=True)
    neg = zero = pos = 0
    n = len(d)
    small = PIVOT_TOL * max(1.0, np.abs(A).max())
    tiny = False
    i = 0
    while i < n:
        if i + 1 < n and d[i + 1, i] != 0.0:
            ev = np.linalg.eigvalsh(d[i:i + 2, i:i + 2])
            block = ev
            i += 2
        else:
            block = [d[i, i]]
            i += 1
        for v in block:
            if abs(v) < small:
                tiny = True
                zero += 1
            elif v < 0:
                neg += 1
            else:
                pos += 1
    return neg, zero, pos, tiny


def _sparse_ldl(A: sp.spmatrix):
    """LDL^T via SuperLU with symmetric ordering and diagonal pivots only."""
    lu = spla.splu(
        sp.csc_matrix(A),
        permc_spec="COLAMD",
        diag_pivot_thresh=0.0,
        options=dict(SymmetricMode=True),
    )
    if not np.array_equal(lu.perm_r, lu.perm_c):
        raise FactorizationError("factorization left the symmetric pivot order")
    return lu


def _sparse_inertia(A: sp.spmatrix):
    lu = _sparse_ldl(A)
    d = lu.U.diagonal()
    small = PIVOT_TOL * max(1.0, abs(A).max())
    tiny = bool(np.any(np.abs(d) < small))
    neg = int(np.count_nonzero(d < 0))
    zero = int(np.count_nonzero(np.abs(d) < small))
    return neg, zero, len(d) - neg - zero, tiny


def inertia(pencil: SpectralPencil, gamma: float, threshold: float,
            method: str = "auto", max_retries: int = 3) -> Inertia:
    """Inertia of the shifted pencil with deterministic upward tie-breaking."""
    if not np.isfinite(threshold):
        raise ValueError("threshold must be finite")
    if method == "auto":
        method = "dense" if pencil.dim <= 500 else "sparse"
    base = pencil.operator(gamma)
    t = float(threshold)
    for attempt in range(max_retries + 1):
        A = (base - t * pencil.M).tocsc()
        try:
            if method == "dense":
                neg, zero, pos, tiny = _dense_inertia(A.toarray())
            else:
                neg, zero, pos, tiny = _sparse_inertia(A)
        except (RuntimeError, FactorizationError) as exc:
            log.info("factorization failed at threshold %r: %s", t, exc)
            tiny = True
            neg = zero = pos = -1
        if not tiny:
            if attempt:
                log.warning("count at %r used perturbed threshold %r", threshold, t)
            return Inertia(neg, zero, pos, t, float(threshold), attempt)
        t = t * (1 + 1e-10) + 1e-10
    raise FactorizationError(f"no stable factorization near threshold {threshold!r}")


def count_below(pencil: SpectralPencil, gamma: float, threshold: float, method: str = "auto") -> int:
    """Number of discrete eigenvalues strictly below ``threshold``."""
    return inertia(pencil, gamma, threshold, method).negative


def _residuals(A, M, vals, vecs):
    r = A @ vecs - (M @ vecs) * vals[None, :]
    mnorm = np.sqrt(np.einsum("ij,ij->j", vecs, M @ vecs))
    return np.linalg.norm(r, axis=0) / mnorm


def solve_dense(pencil: SpectralPencil, gamma: float, n: int | None = None) -> EigenResult:
    A = pencil.operator(gamma).toarray()
    M = pencil.M.toarray()
    sub = None if n is None else [0, n - 1]
    vals, vecs = sla.eigh(A, M, subset_by_index=sub)
    res = _residuals(A, M, vals, vecs)
    return EigenResult(gamma, vals, vecs, res)


def find_shift(pencil: SpectralPencil, gamma: float, hint: float | None = None,
               max_tries: int = 30) -> float:
    """A shift certified below the whole spectrum (inertia zero)."""
    sigma = 1.25 * hint if hint is not None and hint < 0 else -2.0 * max(gamma, 1.0) ** 2
    if hint is not None and hint >= 0:
        sigma = -1.0
    for _ in range(max_tries):
        if count_below(pencil, gamma, sigma) == 0:
            return sigma
        sigma = 2.0 * sigma - 1.0
    raise EigenSolverError("could not find a shift below the spectrum")


def solve_lowest(pencil: SpectralPencil, gamma: float, n: int, tol: float = 1e-10,
                 hint: float | None = None, method: str = "auto",
                 maxiter: int | None = None) -> EigenResult:
    """The ``n`` smallest eigenpairs, M-orthonormal and ascending.

    ``hint`` is a predicted lowest eigenvalue (e.g. from the sector model)
    used to start the search for a valid shift.
    """
    if n < 1 or n > pencil.dim:
        raise ValueError(f"cannot compute {n} eigenpairs of a dimension-{pencil.dim} pencil")
    if method == "auto":
        method = "dense" if pencil.dim <= DENSE_MAX else "shift-invert"
    if method == "dense":
        return solve_dense(pencil, gamma, n)
    sigma = find_shift(pencil, gamma, hint)
    A = pencil.operator(gamma)
    lu = _sparse_ldl((A - sigma * pencil.M).tocsc())
    op = spla.LinearOperator(A.shape, matvec=lu.solve, dtype=float)
    ncv = min(pencil.dim, max(2 * n + 1, n + 20))
    try:
        vals, vecs = spla.eigsh(A, k=n, M=pencil.M, sigma=sigma, which="LM", OPinv=op,
                                tol=tol, ncv=ncv, maxiter=maxiter)
    except spla.ArpackNoConvergence as exc:
        raise EigenSolverError(f"shift-invert iteration did not converge: {exc}") from None
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    # re-orthonormalize in the M inner product (Cholesky of the Gram matrix)
    G = vecs.T @ (pencil.M @ vecs)
    L = np.linalg.cholesky(0.5 * (G + G.T))
    vecs = sla.solve_triangular(L, vecs.T, lower=True).T
    res = _residuals(A, pencil.M, vals, vecs)
    return EigenResult(gamma, vals, vecs, res, shift=sigma)
