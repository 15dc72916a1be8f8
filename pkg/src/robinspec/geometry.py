"""Curvilinear polygons: arcs, vertices, tangent frames and curvature integrals.

Boundaries are oriented counterclockwise, so the outward normal of an arc
with unit tangent ``(t1, t2)`` is ``(t2, -t1)`` and convex arcs have
positive signed curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, interpolate

VERTEX_ANGLE_TOL = 1e-8
CLOSURE_TOL = 1e-12


class GeometryError(ValueError):
    """Raised for invalid or degenerate boundary descriptions."""


def _as_points(s) -> np.ndarray:
    return np.atleast_1d(np.asarray(s, dtype=float))


class Arc:
    """Arc-length parametrized boundary piece ``s -> gamma(s)``, ``s in [0, length]``."""

    length: float
    closed: bool = False

    def point(self, s) -> np.ndarray:
        raise NotImplementedError

    def tangent(self, s) -> np.ndarray:
        raise NotImplementedError

    def second_derivative(self, s) -> np.ndarray:
        raise NotImplementedError

    def curvature(self, s) -> np.ndarray:
        """Signed curvature ``g1' g2'' - g2' g1''``."""
        t = self.tangent(s)
        d2 = self.second_derivative(s)
        return t[:, 0] * d2[:, 1] - t[:, 1] * d2[:, 0]

    @property
    def start(self) -> np.ndarray:
        return self.point(0.0)[0]

    @property
    def end(self) -> np.ndarray:
        return self.point(self.length)[0]

    @property
    def is_straight(self) -> bool:
        return False

    def reversed(self) -> "Arc":
        raise NotImplementedError

    def sample(self, max_spacing: float) -> np.ndarray:
        """Arc-length parameters of an even sampling with spacing at most ``max_spacing``."""
        n = max(1, int(math.ceil(self.length / max_spacing)))
        return np.linspace(0.0, self.length, n + 1)

    def turning(self) -> float:
        """Total absolute turning of the tangent along the arc."""
        return 0.0


@dataclass(frozen=True)
class Segment(Arc):
    p0: tuple
    p1: tuple

    def __post_init__(self):
        if math.dist(self.p0, self.p1) <= 0.0:
            raise GeometryError("zero-length segment")

    @property
    def length(self) -> float:
        return math.dist(self.p0, self.p1)

    @property
    def _dir(self) -> np.ndarray:
        return (np.asarray(self.p1, float) - np.asarray(self.p0, float)) / self.length

    def point(self, s) -> np.ndarray:
        s = _as_points(s)
        return np.asarray(self.p0, float)[None, :] + s[:, None] * self._dir[None, :]

    def tangent(self, s) -> np.ndarray:
        s = _as_points(s)
        return np.tile(self._dir, (s.size, 1))

    def second_derivative(self, s) -> np.ndarray:
        return np.zeros((_as_points(s).size, 2))

    def curvature(self, s) -> np.ndarray:
        return np.zeros(_as_points(s).size)

    @property
    def is_straight(self) -> bool:
        return True

    def reversed(self) -> "Segment":
        return Segment(self.p1, self.p0)


@dataclass(frozen=True)
class CircularArc(Arc):
    """Circle arc from polar angle ``theta0`` to ``theta1`` (counterclockwise iff theta1 > theta0)."""

    center: tuple
    radius: float
    theta0: float
    theta1: float

    def __post_init__(self):
        if self.radius <= 0 or self.theta0 == self.theta1:
            raise GeometryError("degenerate circular arc")
        if abs(self.theta1 - self.theta0) > 2 * math.pi + 1e-14:
            raise GeometryError("circular arc spans more than one turn")

    @property
    def length(self) -> float:
        return self.radius * abs(self.theta1 - self.theta0)

    @property
    def closed(self) -> bool:
        return abs(abs(self.theta1 - self.theta0) - 2 * math.pi) < 1e-14

    @property
    def _sign(self) -> float:
        return 1.0 if self.theta1 > self.theta0 else -1.0

    def _theta(self, s):
        return self.theta0 + self._sign * _as_points(s) / self.radius

    def point(self, s) -> np.ndarray:
        th = self._theta(s)
        c = np.asarray(self.center, float)
        return c[None, :] + self.radius * np.column_stack([np.cos(th), np.sin(th)])

    def tangent(self, s) -> np.ndarray:
        th = self._theta(s)
        return self._sign * np.column_stack([-np.sin(th), np.cos(th)])

    def second_derivative(self, s) -> np.ndarray:
        th = self._theta(s)
        return -np.column_stack([np.cos(th), np.sin(th)]) / self.radius

    def curvature(self, s) -> np.ndarray:
        return np.full(_as_points(s).size, self._sign / self.radius)

    def reversed(self) -> "CircularArc":
        return CircularArc(self.center, self.radius, self.theta1, self.theta0)

    def turning(self) -> float:
        return abs(self.theta1 - self.theta0)


class SplineArc(Arc):
    """Interpolating spline through sample points, reparametrized by arc length.

    Quintic interpolation (C4) is used when at least six samples are given,
    cubic otherwise. Arc length is inverted numerically so that the exposed
    parametrization has unit speed.
    """

    def __init__(self, samples):
        pts = np.asarray(samples, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise GeometryError("spline needs at least two (x, y) samples")
        chord = np.r_[0.0, np.cumsum(np.hypot(*np.diff(pts, axis=0).T))]
        if np.any(np.diff(chord) <= 0):
            raise GeometryError("repeated spline sample")
        self.samples = pts
        k = 5 if len(pts) >= 6 else min(3, len(pts) - 1)
        self._spl = interpolate.make_interp_spline(chord, pts, k=k)
        self._d1 = self._spl.derivative(1)
        self._d2 = self._spl.derivative(2) if k >= 2 else None
        self._tmax = chord[-1]
        # cumulative arc length on a fine Gauss grid, inverted by Newton
        knots = np.linspace(0.0, self._tmax, 8 * len(pts) + 1)
        xg, wg = np.polynomial.legendre.leggauss(8)
        a, b = knots[:-1, None], knots[1:, None]
        tq = 0.5 * (a + b) + 0.5 * (b - a) * xg[None, :]
        speed = np.linalg.norm(self._d1(tq.ravel()), axis=1).reshape(tq.shape)
        seg = (0.5 * (b - a)[:, 0]) * (speed @ wg)
        self._knots = knots
        self._cum = np.r_[0.0, np.cumsum(seg)]
        self._length = float(self._cum[-1])

    def __repr__(self):
        return f"SplineArc(n_samples={len(self.samples)}, length={self._length:.6g})"

    @property
    def length(self) -> float:
        return self._length

    def _arclen(self, t):
        i = np.clip(np.searchsorted(self._knots, t, side="right") - 1, 0, len(self._knots) - 2)
        xg, wg = np.polynomial.legendre.leggauss(8)
        a = self._knots[i]
        tq = 0.5 * (a + t)[:, None] + 0.5 * (t - a)[:, None] * xg[None, :]
        speed = np.linalg.norm(self._d1(tq.ravel()), axis=1).reshape(tq.shape)
        return self._cum[i] + 0.5 * (t - a) * (speed @ wg)

    def _param(self, s):
        s = np.clip(_as_points(s), 0.0, self._length)
        t = np.interp(s, self._cum, self._knots)
        for _ in range(30):
            f = self._arclen(t) - s
            step = f / np.linalg.norm(self._d1(t), axis=1)
            t = np.clip(t - step, 0.0, self._tmax)
            if np.max(np.abs(f)) < 1e-14 * max(1.0, self._length):
                break
        return t

    def point(self, s) -> np.ndarray:
        return self._spl(self._param(s))

    def tangent(self, s) -> np.ndarray:
        d1 = self._d1(self._param(s))
        return d1 / np.linalg.norm(d1, axis=1)[:, None]

    def second_derivative(self, s) -> np.ndarray:
        t = self._param(s)
        d1 = self._d1(t)
        sp = np.linalg.norm(d1, axis=1)
        d2 = self._d2(t) if self._d2 is not None else np.zeros_like(d1)
        cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        kappa = cross / sp**3
        normal = np.column_stack([-d1[:, 1], d1[:, 0]]) / sp[:, None]
        return kappa[:, None] * normal

    def reversed(self) -> "SplineArc":
        return SplineArc(self.samples[::-1])

    def turning(self) -> float:
        s = np.linspace(0.0, self._length, 200)
        return float(np.trapz(np.abs(self.curvature(s)), s))


@dataclass(frozen=True)
class Vertex:
    position: tuple
    half_angle: float
    rho_v: float
    incoming: int
    outgoing: int
    bisector: tuple = field(repr=False, default=(1.0, 0.0))

    @property
    def is_convex(self) -> bool:
        return self.half_angle < math.pi / 2


@dataclass(frozen=True)
class SectorGeometry:
    half_angle: float
    truncation_radius: float

    def __post_init__(self):
        if not 0.0 < self.half_angle < math.pi:
            raise GeometryError(f"sector half-angle {self.half_angle} outside (0, pi)")
        if self.truncation_radius <= 0:
            raise GeometryError("truncation radius must be positive")


@dataclass(frozen=True)
class RigidMap:
    """``x -> R (x - origin)``; maps a polygon corner onto its tangent sector."""

    origin: tuple
    rotation: tuple

    @property
    def matrix(self) -> np.ndarray:
        return np.asarray(self.rotation, float).reshape(2, 2)

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, float))
        return (x - np.asarray(self.origin, float)) @ self.matrix.T

    def inverse(self, y) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, float))
        return y @ self.matrix + np.asarray(self.origin, float)

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.matrix))


@dataclass(frozen=True)
class CurvilinearPolygon:
    arcs: tuple
    vertices: tuple

    @property
    def convex_vertices(self) -> tuple:
        return tuple(v for v in self.vertices if v.is_convex)

    @property
    def perimeter(self) -> float:
        return float(sum(a.length for a in self.arcs))

    @property
    def is_straight(self) -> bool:
        return all(a.is_straight for a in self.arcs)

    @property
    def has_reentrant_corner(self) -> bool:
        return any(not v.is_convex for v in self.vertices)

    def boundary_polyline(self, max_spacing: float) -> np.ndarray:
        """Closed polyline through every arc (last point omitted)."""
        pts = [a.point(a.sample(max_spacing))[:-1] for a in self.arcs]
        return np.vstack(pts)

    def area(self) -> float:
        p = self.boundary_polyline(self.perimeter / 4000)
        x, y = p[:, 0], p[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def contains(self, pts, spacing: float | None = None) -> np.ndarray:
        """Even-odd point-in-polygon test against the boundary polyline."""
        poly = self.boundary_polyline(spacing or self.perimeter / 2000)
        pts = np.atleast_2d(pts)
        x, y = pts[:, 0][:, None], pts[:, 1][:, None]
        x0, y0 = poly[:, 0][None, :], poly[:, 1][None, :]
        x1, y1 = np.roll(poly[:, 0], -1)[None, :], np.roll(poly[:, 1], -1)[None, :]
        crosses = (y0 > y) != (y1 > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
        return np.count_nonzero(crosses & (x < xi), axis=1) % 2 == 1

    def vertex_index(self, v) -> int:
        if isinstance(v, (int, np.integer)):
            if not 0 <= v < len(self.vertices):
                raise GeometryError(f"no vertex with index {v}")
            return int(v)
        for i, w in enumerate(self.vertices):
            if w is v or (
                isinstance(v, Vertex) and math.dist(w.position, v.position) < 1e-12
            ):
                return i
        raise GeometryError("point is not a vertex of the polygon")


def _turning_angle(t_in, t_out) -> float:
    cross = t_in[0] * t_out[1] - t_in[1] * t_out[0]
    return math.atan2(cross, float(np.dot(t_in, t_out)))


def _segments_intersect(p, q, r, s) -> bool:
    """Closed segments ``pq`` and ``rs`` share a point (touching counts)."""
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_segment(a, b, c):
        return (min(a[0], b[0]) <= c[0] <= max(a[0], b[0])
                and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]))

    scale = max(abs(q[0] - p[0]) + abs(q[1] - p[1]), abs(s[0] - r[0]) + abs(s[1] - r[1]))
    eps = 1e-14 * scale * scale
    d1, d2 = orient(r, s, p), orient(r, s, q)
    d3, d4 = orient(p, q, r), orient(p, q, s)
    if ((d1 > eps and d2 < -eps) or (d1 < -eps and d2 > eps)) and \
            ((d3 > eps and d4 < -eps) or (d3 < -eps and d4 > eps)):
        return True
    return ((abs(d1) <= eps and on_segment(r, s, p)) or (abs(d2) <= eps and on_segment(r, s, q))
            or (abs(d3) <= eps and on_segment(p, q, r)) or (abs(d4) <= eps and on_segment(p, q, s)))


def _check_simple(poly_pts: np.ndarray) -> None:
    n = len(poly_pts)
    a = poly_pts
    b = np.roll(poly_pts, -1, axis=0)
    lo = np.minimum(a, b)
    hi = np.maximum(a, b)
    for i in range(n):
        cand = np.nonzero(
            np.all(lo <= hi[i], axis=1) & np.all(hi >= lo[i], axis=1)
        )[0]
        for j in cand:
            if j <= i + 1 or (i == 0 and j == n - 1):
                continue
            if _segments_intersect(a[i], b[i], a[j], b[j]):
                raise GeometryError("boundary is self-intersecting")


def build_polygon(arcs: Sequence[Arc]) -> CurvilinearPolygon:
    """Assemble arcs into a counterclockwise curvilinear polygon and detect its vertices."""
    arcs = list(arcs)
    if not arcs:
        raise GeometryError("empty arc list")
    if len(arcs) < 3 and all(a.is_straight for a in arcs):
        raise GeometryError("a straight polygon needs at least three segments")
    for k, arc in enumerate(arcs):
        nxt = arcs[(k + 1) % len(arcs)]
        gap = float(np.linalg.norm(arc.end - nxt.start))
        if gap > CLOSURE_TOL * max(1.0, arc.length):
            raise GeometryError(f"arcs {k} and {(k + 1) % len(arcs)} do not meet (gap {gap:.3e})")

    pts = np.vstack([a.point(a.sample(a.length / 64))[:-1] for a in arcs])
    signed = 0.5 * np.sum(pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1])
    if signed < 0:
        arcs = [a.reversed() for a in reversed(arcs)]
        pts = pts[::-1]
    _check_simple(pts)

    raw = []
    for k, arc in enumerate(arcs):
        nxt_i = (k + 1) % len(arcs)
        t_in = arc.tangent(arc.length)[0]
        t_out = arcs[nxt_i].tangent(0.0)[0]
        turn = _turning_angle(t_in, t_out)
        if abs(turn) <= VERTEX_ANGLE_TOL:
            continue
        alpha = 0.5 * (math.pi - turn)
        if alpha <= VERTEX_ANGLE_TOL or alpha >= math.pi - VERTEX_ANGLE_TOL:
            raise GeometryError("cusp (zero opening angle) at an arc junction")
        phi = math.atan2(t_out[1], t_out[0]) + alpha
        raw.append((tuple(map(float, arc.end)), alpha, k, nxt_i, (math.cos(phi), math.sin(phi))))

    positions = np.array([r[0] for r in raw]) if raw else np.zeros((0, 2))
    vertices = []
    for i, (pos, alpha, k_in, k_out, bis) in enumerate(raw):
        others = np.delete(positions, i, axis=0)
        rho = float(np.min(np.linalg.norm(others - pos, axis=1)) / 2) if len(others) else math.inf
        vertices.append(Vertex(pos, alpha, rho, k_in, k_out, bis))
    return CurvilinearPolygon(tuple(arcs), tuple(vertices))


def curvature_integral(poly: CurvilinearPolygon, lam: float) -> float:
    """Integral over the boundary of ``sqrt((kappa(s) + lam)_+)``."""
    total = 0.0
    for arc in poly.arcs:
        if isinstance(arc, (Segment, CircularArc)):
            kappa = float(arc.curvature(0.0)[0])
            total += arc.length * math.sqrt(max(kappa + lam, 0.0))
            continue
        f = lambda s: math.sqrt(max(float(arc.curvature(s)[0]) + lam, 0.0))  # noqa: E731
        val, _ = integrate.quad(f, 0.0, arc.length, epsabs=1e-10, epsrel=1e-10, limit=400)
        total += val
    return total


def tangent_frame(poly: CurvilinearPolygon, v) -> RigidMap:
    """Rigid map sending vertex ``v`` to the origin and its interior bisector to +x."""
    vert = poly.vertices[poly.vertex_index(v)]
    c, s = vert.bisector
    return RigidMap(vert.position, (c, s, -s, c))


# ----------------------------------------------------------------------------
# stock shapes


def polygon_from_points(points) -> CurvilinearPolygon:
    pts = [tuple(map(float, p)) for p in points]
    return build_polygon([Segment(pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))])


def unit_square() -> CurvilinearPolygon:
    return polygon_from_points([(0, 0), (1, 0), (1, 1), (0, 1)])


def regular_polygon(n_sides: int, circumradius: float = 1.0) -> CurvilinearPolygon:
    th = 2 * np.pi * np.arange(n_sides) / n_sides
    return polygon_from_points(np.column_stack([np.cos(th), np.sin(th)]) * circumradius)


def l_shape() -> CurvilinearPolygon:
    """Six-sided L with five right-angle corners and one reentrant corner."""
    return polygon_from_points([(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)])


def disk(radius: float = 1.0) -> CurvilinearPolygon:
    return build_polygon([CircularArc((0.0, 0.0), radius, 0.0, 2 * math.pi)])


def arc_square(bulge_deg: float = 15.0) -> CurvilinearPolygon:
    """Unit square whose top side is an outward circular arc meeting the chord at ``bulge_deg``."""
    delta = math.radians(bulge_deg)
    r = 0.5 / math.sin(delta)
    cy = 1.0 - r * math.cos(delta)
    start = math.pi / 2 - delta
    return build_polygon([
        Segment((0.0, 0.0), (1.0, 0.0)),
        Segment((1.0, 0.0), (1.0, 1.0)),
        CircularArc((0.5, cy), r, start, math.pi / 2 + delta),
        Segment((0.0, 1.0), (0.0, 0.0)),
    ])


# ----------------------------------------------------------------------------
# polygon description files

_KEYWORDS = {"segment", "circarc", "spline", "end"}


def parse_polygon(text: str) -> CurvilinearPolygon:
    """Parse the line-oriented polygon description format (see README)."""
    arcs: list[Arc] = []
    lines = [ln.split("#", 1)[0].strip() for ln in text.splitlines()]
    i = 0
    while i < len(lines):
        line = lines[i]
        i += 1
        if not line:
            continue
        tok = line.split()
        kind = tok[0].lower()
        try:
            if kind == "segment":
                if len(tok) != 5:
                    raise GeometryError("segment expects x0 y0 x1 y1")
                x0, y0, x1, y1 = map(float, tok[1:])
                arcs.append(Segment((x0, y0), (x1, y1)))
            elif kind == "circarc":
                if len(tok) != 6:
                    raise GeometryError("circarc expects cx cy r theta0 theta1")
                cx, cy, r, t0, t1 = map(float, tok[1:])
                arcs.append(CircularArc((cx, cy), r, t0, t1))
            elif kind == "spline":
                rows = []
                while i < len(lines):
                    nxt = lines[i]
                    if nxt and nxt.split()[0].lower() in _KEYWORDS:
                        break
                    i += 1
                    if nxt:
                        rows.append([float(t) for t in nxt.split()])
                if i < len(lines) and lines[i].lower() == "end":
                    i += 1
                arcs.append(SplineArc(rows))
            else:
                raise GeometryError(f"unknown arc keyword {tok[0]!r}")
        except ValueError as exc:
            if isinstance(exc, GeometryError):
                raise GeometryError(f"line {i}: {exc}") from None
            raise GeometryError(f"line {i}: malformed number") from None
    return build_polygon(arcs)


def read_polygon(path) -> CurvilinearPolygon:
    with open(path) as fh:
        return parse_polygon(fh.read())


def format_polygon(poly: CurvilinearPolygon) -> str:
    out = []
    for a in poly.arcs:
        if isinstance(a, Segment):
            out.append("segment {:.17g} {:.17g} {:.17g} {:.17g}".format(*a.p0, *a.p1))
        elif isinstance(a, CircularArc):
            out.append("circarc {:.17g} {:.17g} {:.17g} {:.17g} {:.17g}".format(
                *a.center, a.radius, a.theta0, a.theta1))
        else:
            out.append("spline")
            out.extend("{:.17g} {:.17g}".format(*p) for p in a.samples)
            out.append("end")
    return "\n".join(out) + "\n"
