"""Lagrange P1/P2 assembly of the Robin pencil (K, B, M).

For a Robin parameter ``gamma`` the discrete quadratic form is
``x.T @ (K - gamma * B) @ x`` against ``x.T @ M @ x``; gamma is applied at
solve time so one assembly serves a whole sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sp
from scipy.spatial import cKDTree

from .mesh import DIRICHLET, ROBIN, TriMesh

# 6-point degree-4 rule on the reference triangle (weights sum to 1)
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
TRI_QUAD_BARY = np.array([
    [_A1, _A1, 1 - 2 * _A1], [_A1, 1 - 2 * _A1, _A1], [1 - 2 * _A1, _A1, _A1],
    [_A2, _A2, 1 - 2 * _A2], [_A2, 1 - 2 * _A2, _A2], [1 - 2 * _A2, _A2, _A2],
])
TRI_QUAD_W = np.array([_W1] * 3 + [_W2] * 3)

# 3-point Gauss-Legendre on [0, 1], exact to degree 5
_g, _gw = np.polynomial.legendre.leggauss(3)
EDGE_QUAD_T = 0.5 * (_g + 1)
EDGE_QUAD_W = 0.5 * _gw


class AssemblyError(ValueError):
    pass


def p2_values(lam: np.ndarray) -> np.ndarray:
    """P2 basis at barycentric points ``lam`` (..., 3) -> (..., 6)."""
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    return np.stack([l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
                     4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0], axis=-1)


def p2_dlam(lam: np.ndarray) -> np.ndarray:
    """Derivatives of the P2 basis w.r.t. barycentrics: (..., 6, 3)."""
    l0, l1, l2 = lam[..., 0], lam[..., 1], lam[..., 2]
    z = np.zeros_like(l0)
    rows = [
        [4 * l0 - 1, z, z],
        [z, 4 * l1 - 1, z],
        [z, z, 4 * l2 - 1],
        [4 * l1, 4 * l0, z],
        [z, 4 * l2, 4 * l1],
        [4 * l2, z, 4 * l0],
    ]
    return np.stack([np.stack(r, axis=-1) for r in rows], axis=-2)


def _bary_gradients(mesh: TriMesh):
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    area = 0.5 * ((x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0]))
    if np.any(area <= 0):
        raise AssemblyError("inverted or degenerate element")
    g = np.empty((len(area), 3, 2))
    g[:, 0] = np.column_stack([y[:, 1] - y[:, 2], x[:, 2] - x[:, 1]])
    g[:, 1] = np.column_stack([y[:, 2] - y[:, 0], x[:, 0] - x[:, 2]])
    g[:, 2] = np.column_stack([y[:, 0] - y[:, 1], x[:, 1] - x[:, 0]])
    return area, g / (2 * area)[:, None, None]


@dataclass(frozen=True, eq=False)
class DofLayout:
    """Global numbering: mesh nodes first, then (P2) one dof per mesh edge."""

    order: int
    n_full: int
    cell_dofs: np.ndarray
    edge_dofs: np.ndarray
    coords: np.ndarray


def dof_layout(mesh: TriMesh, order: int) -> DofLayout:
    if order not in (1, 2):
        raise AssemblyError("element order must be 1 or 2")
    nn = mesh.n_nodes
    tri = mesh.triangles
    be = mesh.boundary_edges
    if order == 1:
        return DofLayout(1, nn, tri.copy(), be.copy(), mesh.nodes.copy())
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    key = np.sort(e, axis=1)
    code = key[:, 0] * nn + key[:, 1]
    uniq, inv = np.unique(code, return_inverse=True)
    nt = len(tri)
    cell = np.column_stack([tri, nn + inv[:nt], nn + inv[nt:2 * nt], nn + inv[2 * nt:]])
    bkey = np.sort(be, axis=1)
    bpos = np.searchsorted(uniq, bkey[:, 0] * nn + bkey[:, 1])
    edge = np.column_stack([be, nn + bpos])
    u0, u1 = uniq // nn, uniq % nn
    coords = np.vstack([mesh.nodes, 0.5 * (mesh.nodes[u0] + mesh.nodes[u1])])
    return DofLayout(2, nn + len(uniq), cell, edge, coords)


@dataclass(frozen=True, eq=False)
class SpectralPencil:
    """Reduced symmetric matrices of the Robin problem on one mesh."""

    K: sp.csr_matrix
    B: sp.csr_matrix
    M: sp.csr_matrix
    dof_map: np.ndarray
    order: int
    mesh: TriMesh
    layout: DofLayout

    @property
    def dim(self) -> int:
        return self.K.shape[0]

    @property
    def free_dofs(self) -> np.ndarray:
        return np.nonzero(self.dof_map >= 0)[0]

    def operator(self, gamma: float) -> sp.csr_matrix:
        return (self.K - gamma * self.B).tocsr()

    def expand(self, x: np.ndarray) -> np.ndarray:
        """Reduced vector(s) -> full dof vector(s), zero on Dirichlet dofs."""
        x = np.asarray(x)
        out = np.zeros((self.layout.n_full,) + x.shape[1:], dtype=x.dtype)
        out[self.free_dofs] = x
        return out

    def restrict(self, full: np.ndarray) -> np.ndarray:
        return np.asarray(full)[self.free_dofs]

    @property
    def dof_coords(self) -> np.ndarray:
        return self.layout.coords[self.free_dofs]

    def export_matrix_market(self, prefix: str) -> list:
        paths = []
        for name in ("K", "B", "M"):
            path = f"{prefix}_{name}.mtx"
            scipy.io.mmwrite(path, getattr(self, name), symmetry="symmetric")
            paths.append(path)
        return paths


def _element_matrices(mesh: TriMesh, order: int):
    area, g = _bary_gradients(mesh)
    if order == 1:
        ke = area[:, None, None] * np.einsum("eik,ejk->eij", g, g)
        mref = (np.ones((3, 3)) + np.eye(3)) / 12.0
        me = area[:, None, None] * mref[None]
        return ke, me
    lam = TRI_QUAD_BARY
    phi = p2_values(lam)
    dl = p2_dlam(lam)
    grad = np.einsum("qij,ejk->eqik", dl, g)
    ke = area[:, None, None] * np.einsum("q,eqik,eqjk->eij", TRI_QUAD_W, grad, grad)
    mref = np.einsum("q,qi,qj->ij", TRI_QUAD_W, phi, phi)
    me = area[:, None, None] * mref[None]
    return ke, me


def _edge_matrix(order: int) -> np.ndarray:
    t = EDGE_QUAD_T
    if order == 1:
        psi = np.column_stack([1 - t, t])
    else:
        psi = np.column_stack([(1 - t) * (1 - 2 * t), t * (2 * t - 1), 4 * t * (1 - t)])
    return np.einsum("q,qi,qj->ij", EDGE_QUAD_W, psi, psi)


def _scatter(dofs: np.ndarray, local: np.ndarray, n: int) -> sp.csr_matrix:
    k = dofs.shape[1]
    rows = np.repeat(dofs, k, axis=1).ravel()
    cols = np.tile(dofs, (1, k)).ravel()
    mat = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.sum_duplicates()
    return mat


def assemble(mesh: TriMesh, order: int = 2) -> SpectralPencil:
    """Stiffness, Robin boundary mass and mass matrices with Dirichlet dofs eliminated."""
    if mesh.n_triangles == 0:
        raise AssemblyError("empty mesh")
    lay = dof_layout(mesh, order)
    ke, me = _element_matrices(mesh, order)
    n = lay.n_full
    K = _scatter(lay.cell_dofs, ke, n)
    M = _scatter(lay.cell_dofs, me, n)
    robin = mesh.boundary_tags == ROBIN
    ed = lay.edge_dofs[robin]
    if len(ed):
        p = mesh.nodes[mesh.boundary_edges[robin]]
        length = np.linalg.norm(p[:, 1] - p[:, 0], axis=1)
        be = length[:, None, None] * _edge_matrix(order)[None]
        B = _scatter(ed, be, n)
    else:
        B = sp.csr_matrix((n, n))
    constrained = np.zeros(n, dtype=bool)
    constrained[lay.edge_dofs[mesh.boundary_tags == DIRICHLET].ravel()] = True
    dof_map = np.full(n, -1, dtype=np.int64)
    free = np.nonzero(~constrained)[0]
    dof_map[free] = np.arange(len(free))

    def reduce(A):
        A = A[free][:, free]
        A = 0.5 * (A + A.T)
        return A.tocsr()

    return SpectralPencil(reduce(K), reduce(B), reduce(M), dof_map, order, mesh, lay)


def rayleigh(pencil: SpectralPencil, gamma: float, x) -> float:
    """``(x K x - gamma x B x) / (x M x)``."""
    x = np.asarray(x, dtype=float)
    den = float(x @ (pencil.M @ x))
    if not np.any(x) or den <= 0:
        raise ValueError("Rayleigh quotient of the zero vector")
    return float(x @ (pencil.K @ x) - gamma * (x @ (pencil.B @ x))) / den


# ----------------------------------------------------------------------------
# evaluation of finite element functions at arbitrary points


class PointLocator:
    """Find containing triangles and barycentric coordinates of query points."""

    def __init__(self, mesh: TriMesh):
        self.mesh = mesh
        p = mesh.nodes[mesh.triangles]
        self._p0 = p[:, 0]
        self._tinv = np.linalg.inv(np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2))
        self._tree = cKDTree(p.mean(axis=1))

    def _bary(self, pts, tri):
        loc = np.einsum("nij,nj->ni", self._tinv[tri], pts - self._p0[tri])
        return np.column_stack([1 - loc.sum(axis=1), loc])

    def locate(self, pts: np.ndarray, tol: float = 1e-10):
        """Return (triangle index or -1, barycentrics, distance outside)."""
        pts = np.atleast_2d(np.asarray(pts, float))
        n = len(pts)
        tri = np.full(n, -1, dtype=np.int64)
        bary = np.zeros((n, 3))
        best = np.full(n, -np.inf)
        best_tri = np.zeros(n, dtype=np.int64)
        k = min(16, self.mesh.n_triangles)
        _, cand = self._tree.query(pts, k=k)
        cand = cand.reshape(n, -1)
        for j in range(cand.shape[1]):
            c = cand[:, j]
            b = self._bary(pts, c)
            score = b.min(axis=1)
            upd = score > best
            best[upd] = score[upd]
            best_tri[upd] = c[upd]
        miss = np.nonzero(best < -tol)[0]
        if len(miss) and self.mesh.n_triangles > k:
            k2 = min(128, self.mesh.n_triangles)
            _, cand = self._tree.query(pts[miss], k=k2)
            for j in range(k, k2):
                c = cand[:, j]
                b = self._bary(pts[miss], c)
                score = b.min(axis=1)
                upd = score > best[miss]
                best[miss[upd]] = score[upd]
                best_tri[miss[upd]] = c[upd]
        inside = best >= -tol
        tri[inside] = best_tri[inside]
        bary = self._bary(pts, best_tri)
        return tri, bary, best_tri


def evaluate(mesh: TriMesh, order: int, values: np.ndarray, pts: np.ndarray,
             locator: PointLocator | None = None, outside: str = "zero") -> np.ndarray:
    """Evaluate a full-dof finite element function at points.

    ``outside`` selects the treatment of points not covered by the mesh:
    ``"zero"`` or ``"clamp"`` (value at the nearest boundary point of the
    closest triangle, via clipped barycentrics).
    """
    loc = locator or PointLocator(mesh)
    lay = dof_layout(mesh, order)
    tri, bary, best = loc.locate(pts)
    use = best.copy()
    b = bary.copy()
    if outside == "clamp":
        b = np.clip(b, 0.0, None)
        b /= b.sum(axis=1, keepdims=True)
    basis = b if order == 1 else p2_values(b)
    vals = np.asarray(values)[lay.cell_dofs[use]]
    if vals.ndim == 3:
        out = np.einsum("ni,nik->nk", basis, vals)
    else:
        out = np.einsum("ni,ni->n", basis, vals)
    if outside == "zero":
        out[tri < 0] = 0.0
    return out
