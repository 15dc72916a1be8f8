"""Reading and writing meshes in the Triangle ``.node`` / ``.ele`` / ``.poly`` format.

Indices in the files are 1-based on export; files whose first index is 0
are read as 0-based. Boundary markers: 1 = Robin, 2 = Dirichlet, 0 =
interior node (or an unmarked segment, read as Robin).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import DIRICHLET, ROBIN, MeshError, TriMesh


class MeshFormatError(MeshError):
    pass


def _rows(path: Path) -> list:
    try:
        text = path.read_text()
    except OSError as exc:
        raise MeshFormatError(f"cannot read {path}: {exc}") from None
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            rows.append(line.split())
    return rows


def _ints(row, path, n=None):
    try:
        vals = [int(v) for v in row]
    except ValueError:
        raise MeshFormatError(f"{path}: expected integers, got {' '.join(row)!r}") from None
    if n is not None and len(vals) < n:
        raise MeshFormatError(f"{path}: line {' '.join(row)!r} has too few fields")
    return vals


def _read_node_block(rows, path):
    if not rows:
        raise MeshFormatError(f"{path}: empty node section")
    head = _ints(rows[0], path, 2)
    n, dim = head[0], head[1]
    nattr = head[2] if len(head) > 2 else 0
    nmark = head[3] if len(head) > 3 else 0
    if dim != 2:
        raise MeshFormatError(f"{path}: only 2-D meshes are supported")
    if len(rows) < n + 1:
        raise MeshFormatError(f"{path}: expected {n} nodes, found {len(rows) - 1}")
    ids = np.empty(n, dtype=np.int64)
    xy = np.empty((n, 2))
    marks = np.zeros(n, dtype=np.int64)
    for i, row in enumerate(rows[1:n + 1]):
        if len(row) < 3 + nattr + nmark:
            raise MeshFormatError(f"{path}: node line {' '.join(row)!r} has too few fields")
        try:
            ids[i] = int(row[0])
            xy[i] = float(row[1]), float(row[2])
            if nmark:
                marks[i] = int(row[3 + nattr])
        except ValueError:
            raise MeshFormatError(f"{path}: malformed node line {' '.join(row)!r}") from None
    return ids, xy, marks, rows[n + 1:]


def _check_tags(tags, path):
    bad = sorted(set(np.unique(tags).tolist()) - {0, ROBIN, DIRICHLET})
    if bad:
        raise MeshFormatError(f"{path}: unknown boundary tag {bad[0]}")


def import_mesh(path) -> TriMesh:
    """Read ``<stem>.node`` and ``<stem>.ele`` (and ``<stem>.poly`` if present).

    ``path`` may name any of the three files or the common stem.
    """
    p = Path(path)
    stem = p.with_suffix("") if p.suffix in (".node", ".ele", ".poly") else p
    node_path, ele_path, poly_path = (stem.with_suffix(s) for s in (".node", ".ele", ".poly"))
    ids, xy, node_marks, _ = _read_node_block(_rows(node_path), node_path)
    _check_tags(node_marks, node_path)
    base = int(ids.min()) if len(ids) else 1
    if base not in (0, 1) or not np.array_equal(np.sort(ids), np.arange(base, base + len(ids))):
        raise MeshFormatError(f"{node_path}: node numbers must be consecutive from 0 or 1")
    order = np.argsort(ids)
    xy, node_marks = xy[order], node_marks[order]

    rows = _rows(ele_path)
    if not rows:
        raise MeshFormatError(f"{ele_path}: empty file")
    head = _ints(rows[0], ele_path, 2)
    nt, npt = head[0], head[1]
    if npt != 3:
        raise MeshFormatError(f"{ele_path}: only 3-node triangles are supported")
    if len(rows) < nt + 1:
        raise MeshFormatError(f"{ele_path}: expected {nt} triangles, found {len(rows) - 1}")
    tris = np.array([_ints(r[1:4], ele_path, 3) for r in rows[1:nt + 1]], dtype=np.int64) - base
    if tris.size and (tris.min() < 0 or tris.max() >= len(xy)):
        raise MeshFormatError(f"{ele_path}: triangle references a missing node")
    p0, p1, p2 = (xy[tris[:, k]] for k in range(3))
    area = (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1]) - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
    if np.any(area == 0):
        raise MeshFormatError(f"{ele_path}: degenerate triangle")
    cw = area < 0
    tris[cw] = tris[cw][:, [0, 2, 1]]

    edges, tags = _boundary_from_triangles(tris)
    if poly_path.exists():
        seg, seg_tags = _read_poly_segments(poly_path, base, len(xy))
        lookup = {frozenset(e): t for e, t in zip(seg.tolist(), seg_tags.tolist())}
        tags = np.array([lookup.get(frozenset(e), ROBIN) for e in edges.tolist()], dtype=np.int64)
        # keep the segment order of the file when it covers the whole boundary
        if len(seg) == len(edges) and set(map(frozenset, seg.tolist())) == set(map(frozenset, edges.tolist())):
            oriented = {frozenset(e): e for e in edges.tolist()}
            edges = np.array([oriented[frozenset(s)] for s in seg.tolist()], dtype=np.int64)
            tags = np.where(seg_tags == 0, ROBIN, seg_tags)
    else:
        both_dir = (node_marks[edges[:, 0]] == DIRICHLET) & (node_marks[edges[:, 1]] == DIRICHLET)
        tags = np.where(both_dir, DIRICHLET, ROBIN)
    mesh = TriMesh(xy, tris, edges, tags)
    mesh.validate()
    return mesh


def _boundary_from_triangles(tris):
    e = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    key = np.sort(e, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    if np.any(counts > 2):
        raise MeshFormatError("an edge is shared by more than two triangles")
    edges = e[counts[inv] == 1]
    return edges, np.full(len(edges), ROBIN, dtype=np.int64)


def _read_poly_segments(path, base, n_nodes):
    rows = _rows(path)
    if not rows:
        raise MeshFormatError(f"{path}: empty file")
    head = _ints(rows[0], path, 1)
    n = head[0]
    if n > 0:
        _, _, _, rows = _read_node_block(rows, path)
    else:
        rows = rows[1:]
    if not rows:
        raise MeshFormatError(f"{path}: missing segment section")
    sh = _ints(rows[0], path, 1)
    ns, nmark = sh[0], (sh[1] if len(sh) > 1 else 0)
    if len(rows) < ns + 1:
        raise MeshFormatError(f"{path}: expected {ns} segments")
    seg = np.empty((ns, 2), dtype=np.int64)
    tags = np.zeros(ns, dtype=np.int64)
    for i, row in enumerate(rows[1:ns + 1]):
        vals = _ints(row, path, 3 + nmark)
        seg[i] = vals[1] - base, vals[2] - base
        if nmark:
            tags[i] = vals[3]
    if seg.size and (seg.min() < 0 or seg.max() >= n_nodes):
        raise MeshFormatError(f"{path}: segment references a missing node")
    _check_tags(tags, path)
    return seg, tags


def export_mesh(mesh: TriMesh, path) -> list:
    """Write ``<stem>.node``, ``<stem>.ele`` and ``<stem>.poly``; returns the paths."""
    p = Path(path)
    stem = p.with_suffix("") if p.suffix in (".node", ".ele", ".poly") else p
    stem.parent.mkdir(parents=True, exist_ok=True)
    flags = mesh.node_boundary_flags
    node_lines = [f"{mesh.n_nodes} 2 0 1"]
    node_lines += [f"{i + 1} {x:.17g} {y:.17g} {int(f)}" for i, ((x, y), f) in enumerate(zip(mesh.nodes, flags))]
    ele_lines = [f"{mesh.n_triangles} 3 0"]
    ele_lines += [f"{i + 1} {a + 1} {b + 1} {c + 1}" for i, (a, b, c) in enumerate(mesh.triangles)]
    poly_lines = ["0 2 0 1", f"{len(mesh.boundary_edges)} 1"]
    poly_lines += [f"{i + 1} {a + 1} {b + 1} {int(t)}"
                   for i, ((a, b), t) in enumerate(zip(mesh.boundary_edges, mesh.boundary_tags))]
    poly_lines += ["0"]
    out = []
    for suffix, lines in ((".node", node_lines), (".ele", ele_lines), (".poly", poly_lines)):
        f = stem.with_suffix(suffix)
        f.write_text("\n".join(lines) + "\n")
        out.append(f)
    return out
