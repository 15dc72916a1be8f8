"""Bound states of the Robin Laplacian on infinite sectors and their direct sums.

The sector ``|arg x| < alpha`` with Robin parameter 1 has essential spectrum
``[-1, inf)`` and ground state ``-1/sin(alpha)**2`` when ``alpha < pi/2``.
The discrete spectrum below -1 is computed by finite elements on the sector
truncated at radius ``R`` with a Dirichlet arc, which gives upper bounds.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import eig, fem
from .geometry import CurvilinearPolygon
from .mesh import TriMesh, sector_mesh

log = logging.getLogger(__name__)

TAU = 1e-8
DECAY_EPS = 0.1
ALPHA_CACHE_TOL = 1e-12


class SectorError(RuntimeError):
    pass


def ground_state(alpha: float) -> float:
    """Exact lowest eigenvalue at gamma = 1 (only meaningful for alpha < pi/2)."""
    return -1.0 / math.sin(alpha) ** 2


def ground_state_function(alpha: float, x) -> np.ndarray:
    """Exact normalized ground state ``c exp(-x1 / sin alpha)`` in the sector frame."""
    x = np.atleast_2d(np.asarray(x, float))
    s = math.sin(alpha)
    c = 1.0 / math.sqrt(math.tan(alpha) * s * s / 2.0)
    inside = np.abs(x[:, 1]) <= x[:, 0] * math.tan(alpha) + 1e-12
    return np.where(inside, c * np.exp(-x[:, 0] / s), 0.0)


def truncation_radius(E: float, tau: float = TAU, eps: float = DECAY_EPS) -> float:
    """Radius beyond which an eigenfunction at energy ``E`` has decayed by ``tau``."""
    if not E < -1.0:
        raise ValueError("decay radius needs an energy below -1")
    return math.log(1.0 / tau) / ((1.0 - eps) * math.sqrt(-1.0 - E))


def cutoff_level(tol: float) -> float:
    """Eigenvalues are kept when strictly below this level."""
    return -(1.0 + 10.0 * tol)


@dataclass
class SectorSpectrum:
    """Discrete spectrum below -1 of the unit-parameter sector operator.

    ``eigenvalues`` come from the doubled radius ``2 R``, which is where
    ``mesh`` and ``eigenvectors`` live. ``eigenvalues_R`` are the values at
    ``R``; the difference is ``truncation_error_estimate``.
    """

    alpha: float
    truncation_radius: float
    tol: float
    eigenvalues: np.ndarray
    eigenvalues_R: np.ndarray
    truncation_error_estimate: np.ndarray
    fem_error_estimate: np.ndarray
    count: int
    count_R: int
    mesh: TriMesh | None = field(default=None, repr=False)
    order: int = 2
    eigenvectors: np.ndarray | None = field(default=None, repr=False)
    mesh_h: float | None = None
    refinements: int = 0
    _locator: fem.PointLocator | None = field(default=None, repr=False)

    @property
    def count_stable(self) -> bool:
        return self.count == self.count_R

    @property
    def uncertainty(self) -> np.ndarray:
        return np.abs(self.truncation_error_estimate) + np.abs(self.fem_error_estimate)

    def evaluate(self, x, n: int = 0, tol: float = 1e-6) -> np.ndarray:
        """Value of the ``n``-th normalized eigenfunction at sector-frame points.

        Points beyond the computational radius get 0. Points outside the
        wedge by more than ``tol`` (relative to the radius) raise.
        """
        if self.eigenvectors is None:
            raise SectorError("no eigenvectors stored")
        x = np.atleast_2d(np.asarray(x, float))
        r = np.linalg.norm(x, axis=1)
        ang = np.abs(np.arctan2(x[:, 1], x[:, 0]))
        outside = (ang > self.alpha) & (r * np.sin(ang - self.alpha) > tol * np.maximum(r, 1.0))
        if np.any(outside & (r > 0)):
            raise SectorError("point lies outside the sector where the model solution is defined")
        out = np.zeros(len(x))
        radius = 2.0 * self.truncation_radius
        near = r < radius
        if np.any(near):
            if self._locator is None:
                self._locator = fem.PointLocator(self.mesh)
            out[near] = fem.evaluate(self.mesh, self.order, self.eigenvectors[:, n], x[near],
                                     locator=self._locator, outside="clamp")
        return out

    def to_dict(self, vectors: bool = False) -> dict:
        d = dict(alpha=self.alpha, truncation_radius=self.truncation_radius, tol=self.tol,
                 eigenvalues=self.eigenvalues.tolist(), eigenvalues_R=self.eigenvalues_R.tolist(),
                 truncation_error_estimate=self.truncation_error_estimate.tolist(),
                 fem_error_estimate=self.fem_error_estimate.tolist(),
                 count=self.count, count_R=self.count_R, count_stable=self.count_stable,
                 order=self.order, mesh_h=self.mesh_h, refinements=self.refinements)
        if vectors and self.eigenvectors is not None:
            d["eigenvectors"] = self.eigenvectors.T.tolist()
        return d


def _solve(alpha, R, h, refinements, order, level, node_cap):
    mesh = sector_mesh(alpha, R, h=h, refinements=refinements, node_cap=node_cap)
    pencil = fem.assemble(mesh, order)
    n = eig.count_below(pencil, 1.0, level)
    if n == 0:
        return mesh, pencil, np.zeros(0), np.zeros((pencil.M.shape[0], 0))
    res = eig.solve_lowest(pencil, 1.0, n, hint=ground_state(alpha))
    return mesh, pencil, res.eigenvalues, res.eigenvectors


def _fix_signs(pencil, vecs):
    full = pencil.expand(vecs)
    for j in range(full.shape[1]):
        k = np.argmax(np.abs(full[:, j]))
        if full[k, j] < 0:
            full[:, j] *= -1
    return full


def _pad(a, n):
    out = np.full(n, np.nan)
    out[:min(n, len(a))] = a[:n]
    return out


_memory_cache: dict = {}


def sector_spectrum(alpha: float, tol: float = 1e-4, h: float | None = None,
                    refinements: int = 2, R: float | None = None, order: int = 2,
                    node_cap: int | None = None, cache_dir: str | Path | None = None,
                    vectors: bool = True) -> SectorSpectrum:
    """Sector eigenvalues below ``-(1 + 10 tol)`` at unit Robin parameter.

    The radius ``R`` defaults to the decay length of the predicted ground
    state. The problem is solved at ``R`` and ``2 R``; the finite element
    error is estimated against the mesh one refinement coarser (or with
    doubled size when ``refinements == 0``).
    """
    if not alpha > 0:
        raise ValueError("half-angle must be positive")
    if not tol > 0:
        raise ValueError("tol must be positive")
    if alpha >= math.pi / 2:
        empty = np.zeros(0)
        return SectorSpectrum(alpha, math.inf, tol, empty, empty, empty, empty, 0, 0,
                              order=order, refinements=refinements, mesh_h=h)
    if R is None:
        R = truncation_radius(ground_state(alpha))
    key = (round(alpha / ALPHA_CACHE_TOL), tol, h, refinements, R, order)
    if key in _memory_cache and (_memory_cache[key].eigenvectors is not None or not vectors):
        return _memory_cache[key]
    cached = _read_cache(cache_dir, key)
    if cached is not None and not vectors:
        return cached
    level = cutoff_level(tol)
    _, _, e_R, _ = _solve(alpha, R, h, refinements, order, level, node_cap)
    mesh2, pencil2, e_2R, v_2R = _solve(alpha, 2 * R, h, refinements, order, level, node_cap)
    if refinements > 0:
        _, _, e_c, _ = _solve(alpha, 2 * R, h, refinements - 1, order, level, node_cap)
    else:
        hc = 2 * (h if h is not None else 0.3 * min(1.0, math.sin(alpha)))
        _, _, e_c, _ = _solve(alpha, 2 * R, hc, 0, order, level, node_cap)
    n = len(e_2R)
    if len(e_R) != n:
        log.warning("sector count at alpha=%.6g changed under radius doubling: %d -> %d",
                    alpha, len(e_R), n)
    trunc = _pad(e_R, n) - e_2R
    # eigenvalues missing at R: the shift is at least the distance to the cutoff
    trunc = np.where(np.isnan(trunc), level - e_2R, trunc)
    fem_err = np.abs(_pad(e_c, n) - e_2R)
    fem_err = np.where(np.isnan(fem_err), np.abs(level - e_2R), fem_err)
    out = SectorSpectrum(alpha, R, tol, e_2R, e_R, trunc, fem_err, n, len(e_R),
                         mesh=mesh2, order=order,
                         eigenvectors=_fix_signs(pencil2, v_2R) if vectors else None,
                         mesh_h=h, refinements=refinements)
    _memory_cache[key] = out
    _write_cache(cache_dir, key, out)
    return out


def _cache_file(cache_dir, key) -> Path:
    a, tol, h, ref, R, order = key
    name = f"sector_a{a}_t{tol:g}_h{h}_r{ref}_R{R:.12g}_p{order}.json"
    return Path(cache_dir) / name


def _read_cache(cache_dir, key) -> SectorSpectrum | None:
    if cache_dir is None:
        return None
    path = _cache_file(cache_dir, key)
    if not path.exists():
        return None
    d = json.loads(path.read_text())
    arr = lambda k: np.asarray(d[k], float)
    return SectorSpectrum(d["alpha"], d["truncation_radius"], d["tol"], arr("eigenvalues"),
                          arr("eigenvalues_R"), arr("truncation_error_estimate"),
                          arr("fem_error_estimate"), d["count"], d["count_R"], order=d["order"],
                          mesh_h=d["mesh_h"], refinements=d["refinements"])


def _write_cache(cache_dir, key, spec: SectorSpectrum) -> None:
    if cache_dir is None:
        return
    path = _cache_file(cache_dir, key)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(spec.to_dict(), indent=1))


def clear_cache() -> None:
    _memory_cache.clear()


@dataclass(frozen=True)
class ScalingReport:
    alpha: float
    gamma: float
    unit_eigenvalues: np.ndarray
    scaled_eigenvalues: np.ndarray
    max_relative_error: float

    @property
    def ok(self) -> bool:
        return self.max_relative_error <= 1e-12


def scaling_check(alpha: float, gamma: float, n: int = 1, R: float | None = None,
                  h: float | None = None, order: int = 2) -> ScalingReport:
    """Compare the gamma-problem on the 1/gamma-scaled mesh with gamma**2 times the unit problem."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    if R is None:
        R = truncation_radius(ground_state(alpha)) if alpha < math.pi / 2 else 10.0
    mesh = sector_mesh(alpha, R, h=h)
    unit = fem.assemble(mesh, order)
    method = "dense" if unit.dim <= eig.DENSE_MAX else "shift-invert"
    e1 = eig.solve_lowest(unit, 1.0, n, method=method).eigenvalues
    scaled = fem.assemble(mesh.scaled(1.0 / gamma), order)
    eg = eig.solve_lowest(scaled, gamma, n, method=method,
                          hint=gamma**2 * min(e1[0], -1.0)).eigenvalues
    err = float(np.max(np.abs(eg - gamma**2 * e1) / np.abs(gamma**2 * e1)))
    return ScalingReport(alpha, gamma, e1, eg, err)


# ----------------------------------------------------------------------------
# direct sum over the convex vertices of a polygon


@dataclass(frozen=True)
class Cluster:
    value: float
    members: tuple  # ((n, vertex index), ...) with n starting at 1
    multiplicity: int


@dataclass
class ModelSum:
    per_vertex: dict
    clusters: list
    cluster_tol: float
    ambiguities: list = field(default_factory=list)
    alternative_clusters: list | None = None

    @property
    def N_total(self) -> int:
        return sum(s.count for s in self.per_vertex.values())

    @property
    def E_max(self) -> float | None:
        return self.clusters[-1].value if self.clusters else None

    @property
    def eigenvalues(self) -> np.ndarray:
        """All model eigenvalues with multiplicity, ascending."""
        vals = [e for s in self.per_vertex.values() for e in s.eigenvalues]
        return np.sort(np.asarray(vals, float))

    def cluster_of(self, n: int, v: int) -> Cluster:
        for c in self.clusters:
            if (n, v) in c.members:
                return c
        raise KeyError((n, v))


def _group(vals, labels, tol):
    clusters, cur = [], [0]
    for i in range(1, len(vals)):
        if vals[i] - vals[i - 1] <= tol:
            cur.append(i)
        else:
            clusters.append(cur)
            cur = [i]
    if vals.size:
        clusters.append(cur)
    out = []
    for idx in clusters:
        members = tuple(sorted(labels[i] for i in idx))
        out.append(Cluster(float(np.mean(vals[idx])), members, len(idx)))
    return out


def build_model_sum(poly: CurvilinearPolygon, tol: float = 1e-4, **sector_kw) -> ModelSum:
    """Sector spectra of every convex vertex merged into clusters.

    Values closer than ``cluster_tol = 10 * max uncertainty`` share a
    cluster. Gaps between 1x and 10x the uncertainty are ambiguous and
    reported together with the clustering at the smaller tolerance.
    """
    per_vertex = {}
    by_alpha = {}
    for i, v in enumerate(poly.vertices):
        if not v.is_convex:
            continue
        hit = next((s for a, s in by_alpha.items() if abs(a - v.half_angle) <= ALPHA_CACHE_TOL), None)
        if hit is None:
            hit = sector_spectrum(v.half_angle, tol, **sector_kw)
            by_alpha[v.half_angle] = hit
        per_vertex[i] = hit
    vals, labels, unc = [], [], []
    for i, s in per_vertex.items():
        for n, e in enumerate(s.eigenvalues):
            vals.append(e)
            labels.append((n + 1, i))
            unc.append(s.uncertainty[n])
    order = np.argsort(vals, kind="stable")
    vals = np.asarray(vals, float)[order]
    labels = [labels[k] for k in order]
    u = max(unc) if unc else 0.0
    u = max(u, 1e-12)
    cluster_tol = 10.0 * u
    clusters = _group(vals, labels, cluster_tol)
    gaps = np.diff(vals)
    amb = [(labels[k], labels[k + 1], float(gaps[k])) for k in range(len(gaps))
           if u < gaps[k] <= cluster_tol]
    alt = None
    if amb:
        alt = _group(vals, labels, u)
        log.warning("ambiguous model-sum clusters: %s", amb)
    return ModelSum(per_vertex, clusters, cluster_tol, amb, alt)
