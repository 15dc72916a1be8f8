"""Eigenvalue counting asymptotics for large Robin parameter.

Two regimes are checked with exact discrete counts from matrix inertia:

* bulk: ``N(E gamma**2) ~ gamma |boundary| sqrt(E + 1) / pi`` for ``-1 < E < 0``
* edge: ``N(-gamma**2 + lam gamma) ~ sqrt(gamma) / pi * int sqrt((kappa + lam)_+) ds``

plus the eigenvalues just above the corner clusters, which approach
``-gamma**2``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import eig, fem
from .corners import linear_fit, stabilized_lowest
from .geometry import CurvilinearPolygon, curvature_integral
from .mesh import MeshBudgetExceeded, TriMesh, refine_uniform, robin_mesh
from .sector import build_model_sum

log = logging.getLogger(__name__)

DEFAULT_NODE_CAP = 200_000
LAYER_WIDTH = 3.0  # in units of 1/gamma
LAYER_CELLS = 10.0  # cells per 1/gamma on the accepted level


def bulk_prediction(poly: CurvilinearPolygon, E: float, gamma: float) -> float:
    return gamma * poly.perimeter * math.sqrt(E + 1.0) / math.pi


def edge_prediction(poly: CurvilinearPolygon, lam: float, gamma: float) -> float:
    return math.sqrt(gamma) / math.pi * curvature_integral(poly, lam)


@dataclass
class CountResult:
    gamma: float
    threshold: float
    count: int
    mesh_nodes: int
    stabilized: bool
    history: list  # (level, nodes, count)
    mesh: TriMesh | None = field(default=None, repr=False)


def stabilized_count(poly: CurvilinearPolygon, gamma: float, threshold: float, order: int = 2,
                     node_cap: int | None = DEFAULT_NODE_CAP, max_levels: int = 4,
                     layer_cells: float = LAYER_CELLS) -> CountResult:
    """Count eigenvalues below ``threshold`` on nested refinements until two agree.

    Level 0 has boundary cells of size ``2 / (layer_cells gamma)`` within
    ``3 / gamma`` of the boundary; each further level is a uniform refinement,
    so the accepted count (level >= 1) comes from a mesh with
    ``h <= 1 / (layer_cells gamma)``.
    """
    mesh = robin_mesh(poly, gamma, 2.0 / (layer_cells * gamma), LAYER_WIDTH / gamma,
                      node_cap=node_cap)
    history = []
    prev = None
    for level in range(max_levels + 1):
        pencil = fem.assemble(mesh, order)
        c = eig.count_below(pencil, gamma, threshold)
        history.append((level, mesh.n_nodes, c))
        if prev is not None and c == prev:
            return CountResult(gamma, threshold, c, mesh.n_nodes, True, history, mesh)
        if prev is not None and c < prev:
            log.warning("count decreased under refinement at gamma=%g: %d -> %d", gamma, prev, c)
        prev = c
        if level == max_levels:
            break
        # uniform refinement multiplies the node count by about 4
        if node_cap is not None and 4 * mesh.n_nodes > node_cap:
            if level == 0:
                raise MeshBudgetExceeded(
                    f"count at gamma={gamma} needs about {4 * mesh.n_nodes} nodes (cap {node_cap})")
            log.warning("node cap %d reached before the count stabilized at gamma=%g", node_cap, gamma)
            break
        mesh = refine_uniform(mesh)
    return CountResult(gamma, threshold, prev, mesh.n_nodes, False, history, mesh)


@dataclass
class WeylRow:
    regime: str
    gamma: float
    threshold: float
    count: int
    prediction: float
    deviation: float
    mesh_nodes: int
    stabilized: bool


@dataclass
class WeylReport:
    regime: str
    parameter: float
    rows: list

    @property
    def gammas(self) -> np.ndarray:
        return np.array([r.gamma for r in self.rows], float)

    @property
    def counts(self) -> np.ndarray:
        return np.array([r.count for r in self.rows], float)

    def fitted_exponent(self, offset: float = 0.0) -> float:
        """Least-squares slope of ``log(count - offset)`` against ``log(gamma)``."""
        if len(self.rows) < 2:
            raise ValueError("need at least two sweep points")
        c = self.counts - offset
        if np.any(c <= 0):
            return math.nan
        return linear_fit(np.log(self.gammas), np.log(c))[0]


def _report(regime, param, poly, gammas, threshold_fn, predict_fn, order, node_cap,
            layer_cells) -> WeylReport:
    rows = []
    for g in gammas:
        t = threshold_fn(g)
        res = stabilized_count(poly, g, t, order=order, node_cap=node_cap, layer_cells=layer_cells)
        p = predict_fn(g)
        rows.append(WeylRow(regime, float(g), t, res.count, p, res.count - p, res.mesh_nodes,
                            res.stabilized))
    return WeylReport(regime, param, rows)


def weyl_bulk(poly: CurvilinearPolygon, E: float, gammas, order: int = 2,
              node_cap: int | None = DEFAULT_NODE_CAP, layer_cells: float = LAYER_CELLS) -> WeylReport:
    if not -1.0 < E < 0.0:
        raise ValueError("bulk regime needs -1 < E < 0")
    return _report("bulk", E, poly, gammas, lambda g: E * g * g,
                   lambda g: bulk_prediction(poly, E, g), order, node_cap, layer_cells)


def weyl_edge(poly: CurvilinearPolygon, lam: float, gammas, order: int = 2,
              node_cap: int | None = DEFAULT_NODE_CAP, layer_cells: float = LAYER_CELLS) -> WeylReport:
    return _report("edge", lam, poly, gammas, lambda g: -g * g + lam * g,
                   lambda g: edge_prediction(poly, lam, g), order, node_cap, layer_cells)


@dataclass
class TailReport:
    j: int
    n_corner: int
    gammas: np.ndarray
    eigenvalues: np.ndarray
    ratios: np.ndarray
    limit_estimate: float
    trend_to_minus_one: bool


def tail_bracket(poly: CurvilinearPolygon, j: int, gammas, node_cap: int | None = DEFAULT_NODE_CAP,
                 rtol: float = 1e-5, n_corner: int | None = None) -> TailReport:
    """``E_{N+j}`` over a gamma sweep, where ``N`` counts the corner eigenvalues.

    The ratio ``E / gamma**2`` is fitted as ``a + b / gamma``; ``a`` is the
    limit estimate.
    """
    if j < 1:
        raise ValueError("j must be >= 1")
    if n_corner is None:
        n_corner = build_model_sum(poly, refinements=0).N_total
    gammas = np.asarray(gammas, float)
    vals = []
    for g in gammas:
        sol = stabilized_lowest(poly, g, n_corner + j, rtol=rtol, node_cap=node_cap,
                                hint=-2.0 * g * g if n_corner else -g * g)
        vals.append(sol.result.eigenvalues[-1])
    vals = np.array(vals)
    ratios = vals / gammas**2
    if len(gammas) >= 2:
        a = linear_fit(1.0 / gammas, ratios)[0:2][1]
    else:
        a = float(ratios[-1])
    dist = np.abs(ratios + 1.0)
    trend = bool(np.all(np.diff(dist) <= 0))
    return TailReport(j, n_corner, gammas, vals, ratios, float(a), trend)
