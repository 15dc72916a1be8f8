"""Lowest Robin eigenvalues of a polygon against the corner model sum.

The lowest ``N`` eigenvalues (``N`` = number of model eigenvalues) are
computed on a mesh refined until they stop moving, compared with
``gamma**2`` times the model eigenvalues, and each model cluster is
certified with its quasi-modes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import eig, fem, quasimode
from .geometry import CurvilinearPolygon
from .mesh import TriMesh, robin_mesh
from .sector import ModelSum, build_model_sum

log = logging.getLogger(__name__)


@dataclass
class StabilizedSolve:
    result: eig.EigenResult
    mesh: TriMesh
    pencil: fem.SpectralPencil
    history: list  # (layer_h * gamma, n_nodes, eigenvalues)
    stabilized: bool


def stabilized_lowest(poly: CurvilinearPolygon, gamma: float, n: int, rtol: float = 1e-4,
                      start: float = 1.0, max_levels: int = 5, order: int = 2,
                      hint: float | None = None, node_cap: int | None = None) -> StabilizedSolve:
    """Halve the boundary-layer cell size ``start / gamma`` until the lowest
    ``n`` eigenvalues change by at most ``rtol`` (relative)."""
    history = []
    prev = None
    c = start
    for _ in range(max_levels):
        mesh = robin_mesh(poly, gamma, c / gamma, 3.0 / gamma, node_cap=node_cap)
        pencil = fem.assemble(mesh, order)
        res = eig.solve_lowest(pencil, gamma, n, hint=hint)
        history.append((c, mesh.n_nodes, res.eigenvalues.copy()))
        if prev is not None:
            change = np.max(np.abs(res.eigenvalues - prev) / np.maximum(np.abs(res.eigenvalues), 1.0))
            if change <= rtol:
                return StabilizedSolve(res, mesh, pencil, history, True)
        prev = res.eigenvalues
        c /= 2.0
    log.warning("eigenvalues not stabilized after %d levels", max_levels)
    return StabilizedSolve(res, mesh, pencil, history, False)


@dataclass
class CornerRow:
    gamma: float
    n: int
    fem: float
    model: float
    deviation: float
    cert_low: float
    cert_high: float
    verified: int


@dataclass
class CornerReport:
    gamma: float
    model: ModelSum
    rows: list = field(default_factory=list)
    certificates: list = field(default_factory=list)
    solve: StabilizedSolve | None = None
    note: str = ""


def corner_report(poly: CurvilinearPolygon, gamma: float, model: ModelSum | None = None,
                  rtol: float = 1e-4, beta_exp: float = quasimode.DEFAULT_BETA,
                  node_cap: int | None = None, certify: bool = True,
                  cert_layer: float = 0.125) -> CornerReport:
    """FEM eigenvalues against the model sum, with one certificate per cluster.

    Certificates are computed on the mesh with boundary-layer cells of size
    ``cert_layer / gamma`` so that sweeps over gamma are comparable.
    """
    model = model or build_model_sum(poly)
    rep = CornerReport(gamma, model)
    N = model.N_total
    if N == 0:
        rep.note = "N_total=0, no corner eigenvalues to compare"
        return rep
    targets = gamma**2 * model.eigenvalues
    sol = stabilized_lowest(poly, gamma, N, rtol=rtol, hint=targets[0], node_cap=node_cap)
    rep.solve = sol
    cert_of = {}
    if certify:
        cmesh = robin_mesh(poly, gamma, cert_layer / gamma, 3.0 / gamma, node_cap=node_cap)
        cpen = fem.assemble(cmesh, sol.pencil.order)
        for cl in model.clusters:
            try:
                qms = quasimode.build_cluster(poly, cpen, model, cl, gamma, beta_exp=beta_exp)
                c = quasimode.certify(qms, cpen, gamma, lam=gamma**2 * cl.value)
                c.verify(cpen, gamma)
            except (quasimode.QuasiModeError, quasimode.CertificateError) as exc:
                log.warning("no certificate for cluster %.6g: %s", cl.value, exc)
                c = None
            rep.certificates.append(c)
            for member in cl.members:
                cert_of[member] = c
    # rows follow the ascending model eigenvalues
    labels = sorted(((e, (k + 1, v)) for v, s in model.per_vertex.items()
                     for k, e in enumerate(s.eigenvalues)), key=lambda t: t[0])
    for i, (E, lab) in enumerate(labels):
        c = cert_of.get(lab)
        lo, hi = (c.interval if c else (math.nan, math.nan))
        rep.rows.append(CornerRow(gamma, i + 1, float(sol.result.eigenvalues[i]), gamma**2 * E,
                                  float(sol.result.eigenvalues[i] - gamma**2 * E), lo, hi,
                                  -1 if c is None or c.verified_count is None else c.verified_count))
    return rep


@dataclass(frozen=True)
class RateFit:
    kind: str  # "exponential" (log|dev| vs gamma) or "power" (log|dev| vs log gamma)
    slope: float
    intercept: float
    r2: float


def linear_fit(x, y) -> tuple:
    x, y = np.asarray(x, float), np.asarray(y, float)
    A = np.column_stack([x, np.ones_like(x)])
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    ss_res = float(np.sum((y - (a * x + b)) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(a), float(b), r2


def rate_fit(gammas, deviations, straight: bool) -> RateFit:
    """Fit ``log|dev|`` linearly in gamma (straight edges) or in log gamma (curved)."""
    g = np.asarray(gammas, float)
    if len(g) < 3:
        raise ValueError("need >= 3 sweep points")
    d = np.log(np.abs(np.asarray(deviations, float)))
    if straight:
        return RateFit("exponential", *linear_fit(g, d))
    return RateFit("power", *linear_fit(np.log(g), d))
