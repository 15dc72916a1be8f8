"""Triangular meshes for polygons, truncated sectors and boundary layers.

Meshes start from a coarse triangulation of the boundary, are refined
uniformly (red refinement) to a background size and then locally by
longest-edge bisection against a size field. New boundary nodes are placed
on the exact boundary curve by arc-length bisection.

Mesh size convention: a cell of size ``h`` is a right isosceles triangle
with legs ``h``. A triangle satisfies the size field when its longest edge
is at most ``sqrt(2) h`` and each of its boundary edges is at most ``h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .geometry import CircularArc, CurvilinearPolygon, GeometryError, SectorGeometry

ROBIN = 1
DIRICHLET = 2
TAGS = (ROBIN, DIRICHLET)
_SQRT2 = math.sqrt(2.0)


class MeshError(ValueError):
    pass


class MeshBudgetExceeded(RuntimeError):
    """A mesh would exceed the configured node cap."""


@dataclass(frozen=True, eq=False)
class TriMesh:
    """Conforming triangulation with tagged boundary edges.

    ``boundary_edges`` are oriented with the domain on their left.
    ``edge_curves[i]`` indexes ``curves`` (or is -1 for straight edges) and
    ``edge_params[i]`` holds the curve parameters of the two endpoints, which
    lets refinement place midpoints on the exact curve.
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    edge_curves: np.ndarray | None = None
    edge_params: np.ndarray | None = None
    curves: tuple = ()

    def __post_init__(self):
        ne = len(self.boundary_edges)
        if self.edge_curves is None:
            object.__setattr__(self, "edge_curves", np.full(ne, -1, dtype=np.int64))
        if self.edge_params is None:
            object.__setattr__(self, "edge_params", np.zeros((ne, 2)))
        for name in ("nodes", "triangles", "boundary_edges", "boundary_tags",
                     "edge_curves", "edge_params"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def node_boundary_flags(self) -> np.ndarray:
        """0 interior, 1 Robin, 2 Dirichlet (Dirichlet wins at junctions)."""
        flags = np.zeros(self.n_nodes, dtype=np.int64)
        for tag in TAGS:
            idx = self.boundary_edges[self.boundary_tags == tag].ravel()
            flags[idx] = np.maximum(flags[idx], tag)
        return flags

    def signed_areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def area(self) -> float:
        return float(self.signed_areas().sum())

    def edge_lengths(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return np.stack([
            np.linalg.norm(p[:, 1] - p[:, 0], axis=1),
            np.linalg.norm(p[:, 2] - p[:, 1], axis=1),
            np.linalg.norm(p[:, 0] - p[:, 2], axis=1),
        ], axis=1)

    def min_angles(self) -> np.ndarray:
        """Smallest interior angle of every triangle, in degrees."""
        a, b, c = self.edge_lengths().T
        # angle opposite each edge by the law of cosines
        ang = []
        for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
            cosv = np.clip((y * y + z * z - x * x) / (2 * y * z), -1.0, 1.0)
            ang.append(np.degrees(np.arccos(cosv)))
        return np.min(np.stack(ang, axis=1), axis=1)

    def boundary_length(self, tag: int | None = None) -> float:
        e = self.boundary_edges if tag is None else self.boundary_edges[self.boundary_tags == tag]
        d = self.nodes[e[:, 1]] - self.nodes[e[:, 0]]
        return float(np.linalg.norm(d, axis=1).sum())

    def h_max(self) -> float:
        return float(self.edge_lengths().max())

    def validate(self) -> None:
        """Raise MeshError if any structural invariant fails."""
        if self.n_triangles == 0:
            raise MeshError("empty mesh")
        if np.any(self.signed_areas() <= 0):
            raise MeshError("triangle with non-positive signed area")
        tri = self.triangles
        all_e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        key = np.sort(all_e, axis=1)
        uniq, counts = np.unique(key, axis=0, return_counts=True)
        if np.any(counts > 2):
            raise MeshError("edge shared by more than two triangles")
        free = {tuple(e) for e in uniq[counts == 1]}
        bnd = {tuple(sorted(e)) for e in self.boundary_edges.tolist()}
        if free != bnd:
            raise MeshError("boundary edge list does not match the free edges of the mesh")
        # directed: domain on the left means the edge appears in a triangle in this order
        directed = {tuple(e) for e in all_e.tolist()}
        if any(tuple(e) not in directed for e in self.boundary_edges.tolist()):
            raise MeshError("boundary edge orientation does not match its triangle")
        deg = np.bincount(self.boundary_edges.ravel(), minlength=self.n_nodes)
        if np.any((deg != 0) & (deg != 2)):
            raise MeshError("boundary edges do not form closed loops")
        if not set(np.unique(self.boundary_tags).tolist()) <= set(TAGS):
            raise MeshError("unknown boundary tag")

    def permuted(self, perm: np.ndarray) -> "TriMesh":
        """Relabel nodes: new node ``i`` is old node ``perm[i]``."""
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        return TriMesh(self.nodes[perm], inv[self.triangles], inv[self.boundary_edges],
                       self.boundary_tags, self.edge_curves, self.edge_params, self.curves)

    def scaled(self, factor: float) -> "TriMesh":
        """Dilate node coordinates; curve information is dropped."""
        return TriMesh(self.nodes * factor, self.triangles, self.boundary_edges,
                       self.boundary_tags)


@dataclass(frozen=True)
class GradingPolicy:
    """Background size ``target_h`` with geometric grading toward corners.

    Inside ``corner_radius`` of a graded corner the local size is
    ``max(target_h * ratio**levels, d * (1 - ratio) / ratio)`` where ``d``
    is the distance to the corner, so cell sizes along a ray from the
    corner grow by ``1 / ratio`` per cell.
    """

    target_h: float
    corner_radius: float | None = None
    ratio: float = 0.5
    levels: int = 0

    def __post_init__(self):
        if not self.target_h > 0:
            raise MeshError("target_h must be positive")
        if not 0 < self.ratio < 1:
            raise MeshError("grading ratio must lie in (0, 1)")
        if self.corner_radius is not None and not self.corner_radius > 0:
            raise MeshError("corner_radius must be positive")
        if self.levels < 0:
            raise MeshError("levels must be non-negative")

    @property
    def h_min(self) -> float:
        return self.target_h * self.ratio ** self.levels

    @classmethod
    def for_gamma(cls, gamma: float, target_h: float, poly: CurvilinearPolygon | None = None,
                  ratio: float = 0.5) -> "GradingPolicy":
        """Levels chosen so the corner cells resolve the 1/gamma scale with ten cells."""
        levels = max(0, math.ceil(math.log2(gamma * target_h * 10)))
        radius = None
        if poly is not None and poly.vertices:
            radius = min(v.rho_v for v in poly.vertices)
        return cls(target_h, radius, ratio, levels)

    def corner_size(self, d: np.ndarray) -> np.ndarray:
        h = np.maximum(self.h_min, d * (1 - self.ratio) / self.ratio)
        if self.corner_radius is not None:
            h = np.where(d < self.corner_radius, h, np.inf)
        return h


# ----------------------------------------------------------------------------
# coarse triangulation


def _tri_min_angle(p0, p1, p2) -> float:
    a = math.dist(p1, p2)
    b = math.dist(p2, p0)
    c = math.dist(p0, p1)
    if min(a, b, c) == 0:
        return 0.0
    out = []
    for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
        out.append(math.acos(max(-1.0, min(1.0, (y * y + z * z - x * x) / (2 * y * z)))))
    return min(out)


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _ear_clip(pts: np.ndarray) -> list:
    """Greedy ear clipping that always removes the best-shaped ear."""
    idx = list(range(len(pts)))
    tris = []
    while len(idx) > 3:
        best = None
        n = len(idx)
        for k in range(n):
            a, b, c = idx[k - 1], idx[k], idx[(k + 1) % n]
            if _orient(pts[a], pts[b], pts[c]) <= 1e-14:
                continue
            inside = False
            for j in idx:
                if j in (a, b, c):
                    continue
                p = pts[j]
                if (_orient(pts[a], pts[b], p) >= 0 and _orient(pts[b], pts[c], p) >= 0
                        and _orient(pts[c], pts[a], p) >= 0):
                    inside = True
                    break
            if inside:
                continue
            q = _tri_min_angle(pts[a], pts[b], pts[c])
            if best is None or q > best[0]:
                best = (q, k, (a, b, c))
        if best is None:
            raise MeshError("ear clipping failed (degenerate polygon)")
        tris.append(best[2])
        del idx[best[1]]
    tris.append(tuple(idx))
    return tris


def _lawson_flip(pts: np.ndarray, tris: list, fixed: set) -> list:
    """Flip interior edges until every one is locally Delaunay."""
    tris = [list(t) for t in tris]
    for _ in range(10 * len(tris) + 10):
        emap = {}
        for ti, t in enumerate(tris):
            for k in range(3):
                e = (min(t[k], t[(k + 1) % 3]), max(t[k], t[(k + 1) % 3]))
                emap.setdefault(e, []).append(ti)
        flipped = False
        for e, ts in emap.items():
            if len(ts) != 2 or e in fixed:
                continue
            t1, t2 = tris[ts[0]], tris[ts[1]]
            r1 = [v for v in t1 if v not in e][0]
            r2 = [v for v in t2 if v not in e][0]
            a, b = e
            # opposite angles sum > pi means not Delaunay
            def ang(r, p, q):
                u = pts[p] - pts[r]
                v = pts[q] - pts[r]
                return math.atan2(abs(u[0] * v[1] - u[1] * v[0]), float(u @ v))
            if ang(r1, a, b) + ang(r2, a, b) <= math.pi + 1e-12:
                continue
            new1 = [r1, r2, a] if _orient(pts[r1], pts[r2], pts[a]) > 0 else [r2, r1, a]
            new2 = [r1, r2, b] if _orient(pts[r1], pts[r2], pts[b]) > 0 else [r2, r1, b]
            if _orient(*pts[new1]) <= 0 or _orient(*pts[new2]) <= 0:
                continue
            tris[ts[0]], tris[ts[1]] = new1, new2
            flipped = True
            break
        if not flipped:
            break
    return [tuple(t) for t in tris]


def _triangulate_loop(pts: np.ndarray):
    """Coarse triangulation of a simple CCW loop; returns (points, triangles)."""
    n = len(pts)
    fixed = {(min(i, (i + 1) % n), max(i, (i + 1) % n)) for i in range(n)}
    ear = _lawson_flip(pts, _ear_clip(pts), fixed)
    ear_q = min(_tri_min_angle(*pts[list(t)]) for t in ear)
    x, y = pts[:, 0], pts[:, 1]
    cross = x * np.roll(y, -1) - np.roll(x, -1) * y
    area = 0.5 * cross.sum()
    c = np.array([((x + np.roll(x, -1)) * cross).sum(), ((y + np.roll(y, -1)) * cross).sum()])
    c = c / (6 * area)
    fan = [(i, (i + 1) % n, n) for i in range(n)]
    allp = np.vstack([pts, c])
    if all(_orient(allp[a], allp[b], allp[cc]) > 0 for a, b, cc in fan):
        fan_q = min(_tri_min_angle(*allp[list(t)]) for t in fan)
        if fan_q > ear_q:
            return allp, np.array(fan)
    return pts, np.array(ear)


# ----------------------------------------------------------------------------
# uniform refinement


def _snap(mesh_curves, curve_ids, params, fallback):
    out = fallback.copy()
    for cid in np.unique(curve_ids):
        if cid < 0:
            continue
        sel = curve_ids == cid
        out[sel] = mesh_curves[cid].point(0.5 * (params[sel, 0] + params[sel, 1]))
    return out


def refine_uniform(mesh: TriMesh) -> TriMesh:
    """Split every triangle into four through its edge midpoints."""
    nn = mesh.n_nodes
    tri = mesh.triangles
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    key = np.sort(e, axis=1)
    code = key[:, 0] * nn + key[:, 1]
    uniq, inv = np.unique(code, return_inverse=True)
    u0, u1 = uniq // nn, uniq % nn
    mids = 0.5 * (mesh.nodes[u0] + mesh.nodes[u1])
    be = mesh.boundary_edges
    bcode = np.sort(be, axis=1)
    bpos = np.searchsorted(uniq, bcode[:, 0] * nn + bcode[:, 1])
    if len(be):
        mids[bpos] = _snap(mesh.curves, mesh.edge_curves, mesh.edge_params, mids[bpos])
    nt = len(tri)
    m01 = nn + inv[:nt]
    m12 = nn + inv[nt:2 * nt]
    m20 = nn + inv[2 * nt:]
    a, b, c = tri.T
    new_tri = np.concatenate([
        np.column_stack([a, m01, m20]),
        np.column_stack([m01, b, m12]),
        np.column_stack([m20, m12, c]),
        np.column_stack([m01, m12, m20]),
    ])
    bm = nn + bpos
    new_be = np.concatenate([np.column_stack([be[:, 0], bm]), np.column_stack([bm, be[:, 1]])])
    p = mesh.edge_params
    smid = 0.5 * (p[:, 0] + p[:, 1])
    new_par = np.concatenate([np.column_stack([p[:, 0], smid]), np.column_stack([smid, p[:, 1]])])
    out = TriMesh(
        np.vstack([mesh.nodes, mids]),
        new_tri,
        new_be,
        np.concatenate([mesh.boundary_tags, mesh.boundary_tags]),
        np.concatenate([mesh.edge_curves, mesh.edge_curves]),
        new_par,
        mesh.curves,
    )
    if np.any(out.signed_areas() <= 0):
        raise MeshError("refinement produced an inverted triangle (boundary too coarse)")
    return out


# ----------------------------------------------------------------------------
# longest-edge bisection


class _Bisector:
    """Mutable mesh state for Rivara longest-edge-propagation bisection."""

    def __init__(self, mesh: TriMesh):
        self.x = mesh.nodes[:, 0].tolist()
        self.y = mesh.nodes[:, 1].tolist()
        self.tris = [list(map(int, t)) for t in mesh.triangles]
        self.alive = [True] * len(self.tris)
        self.curves = mesh.curves
        self.emap: dict = {}
        for ti, t in enumerate(self.tris):
            for k in range(3):
                self._add(t[k], t[(k + 1) % 3], ti)
        self.bnd = {}
        for (a, b), tag, cid, (s0, s1) in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags.tolist(),
                                             mesh.edge_curves.tolist(), mesh.edge_params.tolist()):
            self.bnd[(min(a, b), max(a, b))] = (a, b, tag, cid, s0, s1)
        self.new_children: list = []

    def _add(self, a, b, ti):
        self.emap.setdefault((a, b) if a < b else (b, a), []).append(ti)

    def _remove(self, a, b, ti):
        key = (a, b) if a < b else (b, a)
        lst = self.emap[key]
        lst.remove(ti)
        if not lst:
            del self.emap[key]

    def _len2(self, a, b):
        dx = self.x[a] - self.x[b]
        dy = self.y[a] - self.y[b]
        return dx * dx + dy * dy

    def _longest_exact(self, t):
        cands = []
        for k in range(3):
            a, b = t[k], t[(k + 1) % 3]
            cands.append((self._len2(a, b), (a, b) if a < b else (b, a)))
        lmax = max(c[0] for c in cands)
        ties = [c[1] for c in cands if c[0] >= lmax * (1 - 1e-10)]
        return min(ties)

    def bisect_edge(self, key):
        a, b = key
        rec = self.bnd.pop(key, None)
        mx = 0.5 * (self.x[a] + self.x[b])
        my = 0.5 * (self.y[a] + self.y[b])
        if rec is not None and rec[3] >= 0:
            smid = 0.5 * (rec[4] + rec[5])
            mx, my = self.curves[rec[3]].point(smid)[0]
        m = len(self.x)
        self.x.append(float(mx))
        self.y.append(float(my))
        if rec is not None:
            p, q, tag, cid, s0, s1 = rec
            smid = 0.5 * (s0 + s1)
            self.bnd[(min(p, m), max(p, m))] = (p, m, tag, cid, s0, smid)
            self.bnd[(min(m, q), max(m, q))] = (m, q, tag, cid, smid, s1)
        for ti in list(self.emap[key]):
            t = self.tris[ti]
            k = next(k for k in range(3) if {t[k], t[(k + 1) % 3]} == {a, b})
            i, j, r = t[k], t[(k + 1) % 3], t[(k + 2) % 3]
            self.alive[ti] = False
            for u, v in ((i, j), (j, r), (r, i)):
                self._remove(u, v, ti)
            for child in ((i, m, r), (m, j, r)):
                ci = len(self.tris)
                self.tris.append(list(child))
                self.alive.append(True)
                for kk in range(3):
                    self._add(child[kk], child[(kk + 1) % 3], ci)
                self.new_children.append(ci)

    def refine_triangle(self, ti):
        """Bisect ``ti`` (and whatever conformity requires) by following its LEPP."""
        guard = 0
        while self.alive[ti]:
            cur = ti
            while True:
                e = self._longest_exact(self.tris[cur])
                nbs = [t for t in self.emap[e] if t != cur]
                if not nbs or self._longest_exact(self.tris[nbs[0]]) == e:
                    self.bisect_edge(e)
                    break
                cur = nbs[0]
            guard += 1
            if guard > 10000:
                raise MeshError("longest-edge propagation did not terminate")

    def to_mesh(self) -> TriMesh:
        live = [t for t, ok in zip(self.tris, self.alive) if ok]
        recs = list(self.bnd.values())
        return TriMesh(
            np.column_stack([self.x, self.y]),
            np.array(live, dtype=np.int64),
            np.array([[r[0], r[1]] for r in recs], dtype=np.int64).reshape(-1, 2),
            np.array([r[2] for r in recs], dtype=np.int64),
            np.array([r[3] for r in recs], dtype=np.int64),
            np.array([[r[4], r[5]] for r in recs], dtype=float).reshape(-1, 2),
            self.curves,
        )


def refine_to_size(mesh: TriMesh, size_fn: Callable[[np.ndarray], np.ndarray],
                   node_cap: int | None = None) -> TriMesh:
    """Bisect longest edges until every triangle satisfies ``size_fn``.

    ``size_fn`` maps an (n, 2) array of points to local target sizes. The
    size at a triangle is the minimum over its vertices and centroid.
    """
    st = _Bisector(mesh)

    def too_big_batch(ids):
        if not ids:
            return []
        t = np.array([st.tris[i] for i in ids])
        X = np.asarray(st.x)[t]
        Y = np.asarray(st.y)[t]
        pts = np.concatenate([np.stack([X, Y], axis=2),
                              np.stack([X.mean(1), Y.mean(1)], axis=1)[:, None, :]], axis=1)
        h = np.min(np.asarray(size_fn(pts.reshape(-1, 2)), float).reshape(-1, 4), axis=1)
        if np.any(h <= 0):
            raise MeshError("size field must be positive")
        l2 = np.stack([(X[:, k] - X[:, (k + 1) % 3]) ** 2 + (Y[:, k] - Y[:, (k + 1) % 3]) ** 2
                       for k in range(3)], axis=1)
        big = l2.max(axis=1) > 2 * h * h * (1 + 1e-9)
        for n, i in enumerate(ids):
            if big[n]:
                continue
            tt = st.tris[i]
            for k in range(3):
                a, b = tt[k], tt[(k + 1) % 3]
                if ((a, b) if a < b else (b, a)) in st.bnd and l2[n, k] > h[n] ** 2 * (1 + 1e-9):
                    big[n] = True
                    break
        return [i for i, flag in zip(ids, big) if flag]

    pending = too_big_batch(list(range(len(st.tris))))
    while pending:
        for ti in pending:
            if st.alive[ti]:
                st.refine_triangle(ti)
            if node_cap is not None and len(st.x) > node_cap:
                raise MeshBudgetExceeded(f"mesh exceeds node cap {node_cap}")
        fresh = [c for c in st.new_children if st.alive[c]]
        st.new_children = []
        pending = too_big_batch(fresh)
    out = st.to_mesh()
    if np.any(out.signed_areas() < 1e-12):
        raise MeshError("bisection produced a triangle below 1e-12 area")
    return out


# ----------------------------------------------------------------------------
# public meshers


def _coarse_polygon_mesh(poly: CurvilinearPolygon) -> TriMesh:
    pts, cids, spar = [], [], []
    for k, arc in enumerate(poly.arcs):
        pieces = 1 if arc.is_straight else max(1, math.ceil(arc.turning() / (math.pi / 6) - 1e-9))
        if arc.closed:
            pieces = max(pieces, 6)
        s = np.linspace(0.0, arc.length, pieces + 1)
        p = arc.point(s)
        for i in range(pieces):
            pts.append(p[i])
            cids.append(-1 if arc.is_straight else k)
            spar.append((s[i], s[i + 1]))
    pts = np.array(pts)
    allp, tris = _triangulate_loop(pts)
    n = len(pts)
    be = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    return TriMesh(allp, tris, be, np.full(n, ROBIN), np.array(cids), np.array(spar), tuple(poly.arcs))


def _max_boundary_edge(mesh: TriMesh) -> float:
    d = mesh.nodes[mesh.boundary_edges[:, 1]] - mesh.nodes[mesh.boundary_edges[:, 0]]
    return float(np.linalg.norm(d, axis=1).max())


def _point_corner_distance(pts: np.ndarray, corners: np.ndarray) -> np.ndarray:
    if len(corners) == 0:
        return np.full(len(pts), np.inf)
    d = np.linalg.norm(pts[:, None, :] - corners[None, :, :], axis=2)
    return d.min(axis=1)


def polygon_base_mesh(poly: CurvilinearPolygon, target_h: float) -> TriMesh:
    """Coarse triangulation refined uniformly to cell size ``target_h``."""
    if not target_h > 0:
        raise MeshError("target_h must be positive")
    mesh = _coarse_polygon_mesh(poly)
    while mesh.h_max() > _SQRT2 * target_h or _max_boundary_edge(mesh) > target_h:
        mesh = refine_uniform(mesh)
    return mesh


def mesh_polygon(poly: CurvilinearPolygon, policy: GradingPolicy,
                 extra_size: Callable | None = None, node_cap: int | None = None) -> TriMesh:
    """Mesh a curvilinear polygon, graded toward every convex vertex.

    ``extra_size`` is an optional additional size field (e.g. a boundary
    layer); the effective size is the pointwise minimum.
    """
    if poly.area() <= 0:
        raise MeshError("degenerate polygon")
    mesh = polygon_base_mesh(poly, policy.target_h)
    corners = np.array([v.position for v in poly.convex_vertices]).reshape(-1, 2)
    radius = policy.corner_radius
    if radius is None and poly.vertices:
        radius = min(v.rho_v for v in poly.vertices)
    pol = GradingPolicy(policy.target_h, radius, policy.ratio, policy.levels)

    def size(p):
        h = np.full(len(p), policy.target_h)
        if policy.levels > 0 and len(corners):
            h = np.minimum(h, pol.corner_size(_point_corner_distance(p, corners)))
        if extra_size is not None:
            h = np.minimum(h, extra_size(p))
        return h

    if (policy.levels > 0 and len(corners)) or extra_size is not None:
        mesh = refine_to_size(mesh, size, node_cap)
    if node_cap is not None and mesh.n_nodes > node_cap:
        raise MeshBudgetExceeded(f"mesh exceeds node cap {node_cap}")
    return mesh


def boundary_layer_size(poly: CurvilinearPolygon, h_layer: float, width: float,
                        growth: float = 0.5) -> Callable[[np.ndarray], np.ndarray]:
    """Size field ``h_layer`` within ``width`` of the boundary, growing linearly beyond."""
    samples = poly.boundary_polyline(min(h_layer, width) / 4)
    tree = cKDTree(samples)

    def size(p):
        d, _ = tree.query(p)
        return h_layer + growth * np.maximum(d - width, 0.0)

    return size


def robin_mesh(poly: CurvilinearPolygon, gamma: float, layer_h: float, layer_width: float,
               target_h: float = 0.2, graded: bool = True, node_cap: int | None = None) -> TriMesh:
    """Mesh resolving the Robin boundary layer at parameter ``gamma``.

    Cells have size ``layer_h`` within ``layer_width`` of the boundary and
    are graded toward convex corners down to a tenth of ``1/gamma``.
    """
    if not gamma > 0:
        raise MeshError("gamma must be positive")
    if graded and poly.convex_vertices:
        policy = GradingPolicy.for_gamma(gamma, target_h, poly)
    else:
        policy = GradingPolicy(target_h)
    return mesh_polygon(poly, policy, boundary_layer_size(poly, layer_h, layer_width),
                        node_cap=node_cap)


def sector_default_policy(alpha: float, R: float, h: float | None = None) -> GradingPolicy:
    """Mesh defaults for the gamma = 1 sector problem."""
    if h is None:
        h = 0.3 * min(1.0, math.sin(alpha))
    return GradingPolicy(target_h=h, corner_radius=min(R / 2, 2.0), ratio=0.5, levels=2)


def mesh_truncated_sector(sec: SectorGeometry, policy: GradingPolicy, growth: float = 0.4,
                          node_cap: int | None = None) -> TriMesh:
    """Mesh of the sector ``|arg x| < alpha`` cut at ``|x| = R``.

    The two straight sides carry the Robin tag and the arc the Dirichlet tag.
    ``policy.target_h`` is the size along the Robin sides; cells grow
    linearly (rate ``growth``) with the distance to the sides and are graded
    geometrically toward the tip inside ``policy.corner_radius``.
    """
    alpha, R = sec.half_angle, sec.truncation_radius
    if policy.corner_radius is not None and not R > policy.corner_radius:
        raise MeshError("truncation radius must exceed the grading radius")
    pieces = max(1, math.ceil(2 * alpha / (math.pi / 6) - 1e-9))
    arc = CircularArc((0.0, 0.0), R, -alpha, alpha)
    s = np.linspace(0.0, arc.length, pieces + 1)
    arc_pts = arc.point(s)
    nodes = np.vstack([[0.0, 0.0], arc_pts])
    n_arc = len(arc_pts)
    tris = [(0, i + 1, i + 2) for i in range(pieces)]
    be = [(0, 1)] + [(i + 1, i + 2) for i in range(pieces)] + [(n_arc, 0)]
    tags = [ROBIN] + [DIRICHLET] * pieces + [ROBIN]
    cids = [-1] + [0] * pieces + [-1]
    par = [(0.0, 0.0)] + [(s[i], s[i + 1]) for i in range(pieces)] + [(0.0, 0.0)]
    mesh = TriMesh(nodes, np.array(tris), np.array(be), np.array(tags), np.array(cids),
                   np.array(par, float), (arc,))
    h_far = max(policy.target_h, R / 4)
    while mesh.h_max() > h_far:
        mesh = refine_uniform(mesh)
    ca, sa = math.cos(alpha), math.sin(alpha)
    rays = np.array([[ca, sa], [ca, -sa]])
    h0 = policy.target_h

    def size(p):
        r = np.linalg.norm(p, axis=1)
        proj = np.clip(p @ rays.T, 0.0, None)
        d_edge = np.sqrt(np.maximum(r[:, None] ** 2 - proj ** 2, 0.0)).min(axis=1)
        h = np.minimum(h0 + growth * d_edge, h_far)
        if policy.levels > 0:
            h = np.minimum(h, policy.corner_size(r))
        return h

    mesh = refine_to_size(mesh, size, node_cap)
    return mesh


def sector_mesh(alpha: float, R: float, h: float | None = None, refinements: int = 0,
                node_cap: int | None = None) -> TriMesh:
    """Default sector mesh, optionally refined uniformly ``refinements`` times."""
    try:
        sec = SectorGeometry(alpha, R)
    except GeometryError as exc:
        raise MeshError(str(exc)) from None
    mesh = mesh_truncated_sector(sec, sector_default_policy(alpha, R, h), node_cap=node_cap)
    for _ in range(refinements):
        mesh = refine_uniform(mesh)
    return mesh
