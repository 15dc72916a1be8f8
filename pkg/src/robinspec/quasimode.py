"""Corner quasi-modes, their residuals, and Gramian spectral certificates.

A quasi-mode transplants a sector eigenfunction to a polygon corner through
the rigid tangent frame, rescales it to Robin parameter ``gamma`` and cuts it
off smoothly near the corner. Residuals are measured for the discrete pencil
``(K - gamma B, M)`` in the norm induced by ``M``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from . import eig
from .fem import SpectralPencil, dof_layout
from .geometry import CurvilinearPolygon, tangent_frame
from .sector import ModelSum, SectorError

DEFAULT_BETA = 2.0 / 3.0


class QuasiModeError(ValueError):
    pass


class CertificateError(ValueError):
    pass


def smoothstep(t) -> np.ndarray:
    """C2 quintic profile: 1 on [0, 1], 0 on [2, inf)."""
    s = np.clip(np.asarray(t, float) - 1.0, 0.0, 1.0)
    return 1.0 - s**3 * (10.0 - 15.0 * s + 6.0 * s * s)


@dataclass(frozen=True)
class Cutoff:
    center: tuple
    inner_radius: float

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, float))
        d = np.linalg.norm(x - np.asarray(self.center, float), axis=1)
        return smoothstep(d / self.inner_radius)

    @property
    def support_radius(self) -> float:
        return 2.0 * self.inner_radius


def cutoff_radius(poly: CurvilinearPolygon, gamma: float, beta_exp: float = DEFAULT_BETA) -> float:
    """Inner cutoff radius: half the smallest vertex radius for straight polygons,
    ``gamma**-beta_exp`` otherwise."""
    if poly.is_straight:
        if not poly.vertices:
            raise QuasiModeError("polygon has no vertices")
        return 0.5 * min(v.rho_v for v in poly.vertices)
    return gamma ** (-beta_exp)


def check_disjoint(poly: CurvilinearPolygon, radius: float) -> None:
    conv = [v for v in poly.vertices if v.is_convex]
    for i in range(len(conv)):
        for j in range(i + 1, len(conv)):
            d = math.dist(conv[i].position, conv[j].position)
            if 4.0 * radius > d * (1 + 1e-12):
                raise QuasiModeError(
                    f"cutoff supports of radius {2 * radius:.4g} overlap (vertex distance {d:.4g}); "
                    "increase gamma")


@dataclass
class QuasiMode:
    vertex: int
    index: int
    gamma: float
    dof_vector: np.ndarray = field(repr=False)
    lambda_target: float
    cutoff: Cutoff

    @property
    def support_radius(self) -> float:
        return self.cutoff.support_radius


def build_quasimode(poly: CurvilinearPolygon, pencil: SpectralPencil, model: ModelSum, v: int,
                    n: int, gamma: float, beta_exp: float = DEFAULT_BETA,
                    radius: float | None = None) -> QuasiMode:
    """Quasi-mode for model eigenpair ``(n, v)`` (``n`` starts at 1) on the pencil's mesh."""
    if v not in model.per_vertex:
        raise QuasiModeError(f"vertex {v} is not a convex vertex of the model sum")
    spec = model.per_vertex[v]
    if not 1 <= n <= spec.count:
        raise QuasiModeError(f"vertex {v} has {spec.count} model eigenvalues; n={n} requested")
    if radius is None:
        radius = cutoff_radius(poly, gamma, beta_exp)
    check_disjoint(poly, radius)
    cut = Cutoff(tuple(poly.vertices[v].position), radius)
    lay = dof_layout(pencil.mesh, pencil.order)
    xy = lay.coords
    chi = cut(xy)
    supp = np.nonzero(chi > 0)[0]
    frame = tangent_frame(poly, v)
    y = gamma * frame(xy[supp])
    try:
        psi = gamma * spec.evaluate(y, n - 1)
    except SectorError as exc:
        raise QuasiModeError(f"cutoff support leaves the tangent sector at vertex {v}: {exc}") from None
    full = np.zeros(lay.n_full)
    full[supp] = psi * chi[supp]
    x = pencil.restrict(full)
    if not np.any(x):
        raise QuasiModeError("quasi-mode vanishes on the mesh")
    return QuasiMode(v, n, gamma, x, gamma**2 * float(spec.eigenvalues[n - 1]), cut)


def build_cluster(poly, pencil, model: ModelSum, cluster, gamma, **kw) -> list:
    return [build_quasimode(poly, pencil, model, v, n, gamma, **kw) for n, v in cluster.members]


class MassSolver:
    """Reusable solver for ``M y = r``."""

    def __init__(self, pencil: SpectralPencil):
        self.lu = spla.splu(pencil.M.tocsc())

    def __call__(self, r):
        return self.lu.solve(np.asarray(r, float))


def residual(qm_or_x, pencil: SpectralPencil, gamma: float, lam: float | None = None,
             mass_solver: MassSolver | None = None) -> float:
    """Normalized discrete residual ``sqrt(r' M^-1 r) / ||x||_M``."""
    if isinstance(qm_or_x, QuasiMode):
        x, lam = qm_or_x.dof_vector, qm_or_x.lambda_target if lam is None else lam
    else:
        x = np.asarray(qm_or_x, float)
        if lam is None:
            raise ValueError("lam is required for a raw vector")
    solve = mass_solver or MassSolver(pencil)
    Mx = pencil.M @ x
    r = pencil.operator(gamma) @ x - lam * Mx
    return float(math.sqrt(max(r @ solve(r), 0.0)) / math.sqrt(x @ Mx))


def gramian(vectors, M) -> np.ndarray:
    X = np.column_stack(vectors)
    G = X.T @ (M @ X)
    return 0.5 * (G + G.T)


@dataclass
class Certificate:
    """``n`` eigenvalues lie in the open interval ``(lambda - halfwidth, lambda + halfwidth)``."""

    lam: float
    n: int
    eta: float
    beta_min: float
    beta_max: float
    halfwidth: float
    orthonormal: bool = False
    verified_count: int | None = None

    @property
    def interval(self) -> tuple:
        return self.lam - self.halfwidth, self.lam + self.halfwidth

    @property
    def claim(self) -> str:
        a, b = self.interval
        return f">= {self.n} eigenvalues in ({a:.10g}, {b:.10g})"

    def verify(self, pencil: SpectralPencil, gamma: float) -> int:
        """Count eigenvalues in the interval by inertia; stored as ``verified_count``."""
        a, b = self.interval
        self.verified_count = eig.count_below(pencil, gamma, b) - eig.count_below(pencil, gamma, a)
        return self.verified_count

    @property
    def sound(self) -> bool | None:
        return None if self.verified_count is None else self.verified_count >= self.n

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lam")
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def certify(qms, pencil: SpectralPencil, gamma: float, lam: float | None = None,
            orthonormal_tol: float = 1e-12, independence_tol: float = 1e-10) -> Certificate:
    """Gramian certificate for a family of quasi-modes sharing one target."""
    qms = list(qms)
    if not qms:
        raise CertificateError("empty family")
    vecs = [q.dof_vector if isinstance(q, QuasiMode) else np.asarray(q, float) for q in qms]
    if lam is None:
        targets = {q.lambda_target for q in qms if isinstance(q, QuasiMode)}
        if len(targets) != 1:
            spread = max(targets) - min(targets) if targets else 0.0
            if not targets or spread > 1e-9 * max(abs(t) for t in targets):
                raise CertificateError("quasi-modes do not share one target value")
        lam = float(np.mean(sorted(targets)))
    n = len(vecs)
    G = gramian(vecs, pencil.M)
    beta = np.linalg.eigvalsh(G)
    if beta[0] <= independence_tol * beta[-1]:
        raise CertificateError(f"Gramian is singular (beta_min={beta[0]:.3e}); family is dependent")
    solve = MassSolver(pencil)
    eta = max(residual(x, pencil, gamma, lam, solve) for x in vecs)
    ortho = bool(np.max(np.abs(G - np.eye(n))) <= orthonormal_tol)
    hw = math.sqrt(n) * eta if ortho else n**1.5 * eta * math.sqrt(beta[-1] / beta[0])
    return Certificate(float(lam), n, eta, float(beta[0]), float(beta[-1]), hw, ortho)


def _m_orthonormal(X, M, tol=1e-10):
    X = np.atleast_2d(np.asarray(X, float))
    if X.shape[0] != M.shape[0]:
        X = X.T
    G = X.T @ (M @ X)
    G = 0.5 * (G + G.T)
    w = np.linalg.eigvalsh(G)
    if w[0] <= tol * max(w[-1], 1e-300):
        raise ValueError("family is numerically rank deficient")
    L = np.linalg.cholesky(G)
    return sla.solve_triangular(L, X.T, lower=True).T


def subspace_distance(span_F, span_E, M) -> float:
    """Largest principal-angle sine from span F into span E in the M geometry.

    Equals ``sqrt(1 - sigma_min**2)`` of the M-orthonormal cross Gram matrix,
    i.e. ``sup_{x in F} dist_M(x, E) / ||x||_M``; it is 1 when
    ``dim F > dim E``.
    """
    QF = _m_orthonormal(span_F, M)
    QE = _m_orthonormal(span_E, M)
    if QF.shape[1] > QE.shape[1]:
        return 1.0
    # sines from the projection residual, accurate for small angles
    Rm = QF - QE @ (QE.T @ (M @ QF))
    S = Rm.T @ (M @ Rm)
    top = float(np.linalg.eigvalsh(0.5 * (S + S.T))[-1])
    return float(min(1.0, math.sqrt(max(0.0, top))))
