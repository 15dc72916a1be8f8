"""Command-line driver: ``robinspec <command> [options]``.

Every command accepts ``--config FILE`` (INI format, one section per
command, keys spelled like the long options with underscores); options
given on the command line win. Each CSV starts with comment lines holding
the schema version and the full resolved configuration.

Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 mesh budget
exceeded.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import logging
import math
import re
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__, corners, eig, geometry, mesh, mesh_io, model1d, quasimode, sector, weyl

log = logging.getLogger("robinspec")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_BUDGET = 0, 1, 2, 3
SHIPPED = ("square", "hexagon", "lshape", "disk", "arcsquare")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ----------------------------------------------------------------------------
# value parsing

_ANGLE = re.compile(r"^\s*([-+]?\d*\.?\d*(?:e[-+]?\d+)?)?\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$", re.I)


def parse_angle(text) -> float:
    """A float, or a multiple of pi such as ``pi/4``, ``5pi/12`` or ``0.5*pi``."""
    s = str(text).strip()
    try:
        return float(s)
    except ValueError:
        pass
    m = _ANGLE.match(s)
    if not m:
        raise UsageError(f"cannot parse angle {text!r}")
    num = float(m.group(1)) if m.group(1) not in (None, "", "+", "-") else (-1.0 if m.group(1) == "-" else 1.0)
    den = float(m.group(2)) if m.group(2) else 1.0
    return num * math.pi / den


def parse_floats(text) -> list:
    try:
        return [float(v) for v in str(text).replace(",", " ").split()]
    except ValueError:
        raise UsageError(f"cannot parse number list {text!r}") from None


def load_polygon(spec: str) -> geometry.CurvilinearPolygon:
    """A path to a polygon file or the name of a shipped example."""
    if spec in SHIPPED:
        text = resources.files("robinspec").joinpath("data", f"{spec}.poly").read_text()
        return geometry.parse_polygon(text)
    p = Path(spec)
    if not p.exists():
        raise UsageError(f"polygon file {spec!r} not found (shipped examples: {', '.join(SHIPPED)})")
    return geometry.read_polygon(p)


# ----------------------------------------------------------------------------
# config handling

def _resolve(args: argparse.Namespace, defaults: dict, section: str) -> dict:
    cfg = dict(defaults)
    if args.config:
        cp = configparser.ConfigParser()
        if not cp.read(args.config):
            raise UsageError(f"cannot read config file {args.config!r}")
        for sec in ("common", section):
            if cp.has_section(sec):
                for k, v in cp.items(sec):
                    k = k.replace("-", "_")
                    if k not in defaults:
                        raise UsageError(f"unknown config key {k!r} in section [{sec}]")
                    cfg[k] = v
    for k in defaults:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _header(command: str, cfg: dict) -> str:
    lines = [f"# schema: robinspec-{command}/{SCHEMA_VERSION}", f"# version: {__version__}"]
    lines += [f"# config: {k}={cfg[k]}" for k in sorted(cfg) if k != "out"]
    return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path: Path, command: str, cfg: dict, columns: list, rows: list) -> Path:
    buf = io.StringIO()
    buf.write(_header(command, cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())
    return path


def _out(cfg) -> Path:
    return Path(cfg["out"])


# ----------------------------------------------------------------------------
# commands

SECTOR_DEFAULTS = dict(alpha=None, tol="1e-4", refinements="2", h="", out="out")


def cmd_sector(args) -> int:
    cfg = _resolve(args, SECTOR_DEFAULTS, "sector")
    if cfg["alpha"] is None:
        raise UsageError("--alpha is required")
    alpha = parse_angle(cfg["alpha"])
    if not 0 < alpha < math.pi:
        raise UsageError("alpha must lie in (0, pi)")
    tol = float(cfg["tol"])
    h = float(cfg["h"]) if str(cfg["h"]).strip() else None
    spec = sector.sector_spectrum(alpha, tol, h=h, refinements=int(cfg["refinements"]))
    out = _out(cfg)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"sector_{alpha:.10f}"
    (out / f"{stem}.json").write_text(json.dumps(spec.to_dict(), indent=1, sort_keys=True) + "\n")
    rows = [(n + 1, spec.eigenvalues[n], spec.eigenvalues_R[n] if n < len(spec.eigenvalues_R) else math.nan,
             spec.truncation_error_estimate[n], spec.fem_error_estimate[n]) for n in range(spec.count)]
    write_csv(out / f"{stem}.csv", "sector", cfg,
              ["n", "eigenvalue", "eigenvalue_R", "truncation_error_estimate", "fem_error_estimate"], rows)
    if not spec.count_stable:
        log.warning("count changed under radius doubling (%d -> %d)", spec.count_R, spec.count)
    print(f"alpha={alpha:.10g} count={spec.count} stable={spec.count_stable} "
          f"eigenvalues={[round(float(e), 8) for e in spec.eigenvalues]}")
    return EXIT_OK


CORNERS_DEFAULTS = dict(poly=None, gammas="10", rtol="1e-4", beta_exp=str(quasimode.DEFAULT_BETA),
                        node_cap="200000", out="out")


def cmd_corners(args) -> int:
    cfg = _resolve(args, CORNERS_DEFAULTS, "corners")
    if cfg["poly"] is None:
        raise UsageError("--poly is required")
    poly = load_polygon(cfg["poly"])
    gammas = parse_floats(cfg["gammas"])
    if not gammas or min(gammas) <= 0:
        raise UsageError("gammas must be positive")
    model = sector.build_model_sum(poly)
    out = _out(cfg)
    rows, certs = [], []
    if model.N_total == 0:
        print("N_total=0, skipping the corner comparison (no convex vertex carries a bound state)")
    for g in gammas:
        if model.N_total == 0:
            break
        rep = corners.corner_report(poly, g, model, rtol=float(cfg["rtol"]),
                                    beta_exp=float(cfg["beta_exp"]), node_cap=int(cfg["node_cap"]))
        for r in rep.rows:
            rows.append((g, r.n, r.fem, r.model, r.deviation, r.cert_low, r.cert_high, r.verified))
        for c in rep.certificates:
            if c is not None:
                certs.append(dict(gamma=g, **c.to_dict()))
    write_csv(out / "corners.csv", "corners", cfg,
              ["gamma", "n", "E_fem", "E_model", "deviation", "cert_low", "cert_high", "verified_count"], rows)
    (out / "certificates.json").write_text(json.dumps(certs, indent=1, sort_keys=True) + "\n")
    for r in rows:
        print(f"gamma={r[0]:g} n={r[1]} E_fem={r[2]:.8g} E_model={r[3]:.8g} dev={r[4]:.3e} verified={r[7]}")
    return EXIT_OK


WEYL_DEFAULTS = dict(poly=None, regime="bulk", param=None, gammas="", order="2", node_cap="200000",
                     layer_cells=str(weyl.LAYER_CELLS), out="out")


def cmd_weyl(args) -> int:
    cfg = _resolve(args, WEYL_DEFAULTS, "weyl")
    if cfg["poly"] is None or cfg["param"] is None:
        raise UsageError("--poly and --param are required")
    poly = load_polygon(cfg["poly"])
    regime = cfg["regime"]
    if regime not in ("bulk", "edge"):
        raise UsageError("regime must be bulk or edge")
    gammas = parse_floats(cfg["gammas"]) if str(cfg["gammas"]).strip() else \
        ([10, 20, 40] if regime == "bulk" else [25, 50, 100])
    param = float(cfg["param"])
    cap = int(cfg["node_cap"]) if str(cfg["node_cap"]).strip() not in ("", "0", "none") else None
    try:
        fn = weyl.weyl_bulk if regime == "bulk" else weyl.weyl_edge
        rep = fn(poly, param, gammas, order=int(cfg["order"]), node_cap=cap,
                 layer_cells=float(cfg["layer_cells"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cols = ["regime", "gamma", "threshold", "count", "prediction", "deviation", "mesh_nodes", "stabilized"]
    rows = [(r.regime, r.gamma, r.threshold, r.count, r.prediction, r.deviation, r.mesh_nodes, r.stabilized)
            for r in rep.rows]
    write_csv(_out(cfg) / f"weyl_{regime}.csv", "weyl", cfg, cols, rows)
    for r in rep.rows:
        print(f"gamma={r.gamma:g} count={r.count} prediction={r.prediction:.4f} stabilized={r.stabilized}")
    if len(rep.rows) >= 2:
        print(f"fitted exponent {rep.fitted_exponent():.4f}")
    return EXIT_OK


MODEL1D_DEFAULTS = dict(kind="RobinDirichlet", gamma=None, l="1", beta="0", grid_n="4000", out="out")


def cmd_model1d(args) -> int:
    cfg = _resolve(args, MODEL1D_DEFAULTS, "model1d")
    if cfg["gamma"] is None:
        raise UsageError("--gamma is required")
    rows = []
    try:
        for g in parse_floats(cfg["gamma"]):
            for l in parse_floats(cfg["l"]):
                op = model1d.Secular1D(cfg["kind"], g, l, float(cfg["beta"]))
                roots = model1d.negative_eigenvalues(op)
                fd = model1d.fd_oracle_1d(op, int(cfg["grid_n"]))
                for i, e in enumerate(roots):
                    ref = model1d.two_term_expansion(g, l) if op.kind == "RobinDirichlet" else math.nan
                    rows.append((op.kind, g, l, op.beta, i + 1, e, fd[i], abs(e - fd[i]), ref))
                if not roots:
                    rows.append((op.kind, g, l, op.beta, 0, math.nan, fd[0], math.nan, math.nan))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    write_csv(_out(cfg) / "model1d.csv", "model1d", cfg,
              ["kind", "gamma", "l", "beta", "n", "secular", "fd", "abs_diff", "expansion"], rows)
    for r in rows:
        print(f"{r[0]} gamma={r[1]:g} l={r[2]:g} n={r[4]} E={r[5]:.12g} fd={r[6]:.8g}")
    return EXIT_OK


RATES_DEFAULTS = dict(poly=None, gammas="6,8,10,12", rtol="1e-6", node_cap="200000", out="out")


def cmd_rates(args) -> int:
    cfg = _resolve(args, RATES_DEFAULTS, "rates")
    if cfg["poly"] is None:
        raise UsageError("--poly is required")
    gammas = parse_floats(cfg["gammas"])
    if len(gammas) < 3:
        raise UsageError("need >= 3 sweep points")
    poly = load_polygon(cfg["poly"])
    model = sector.build_model_sum(poly)
    if model.N_total == 0:
        raise UsageError("polygon has no corner eigenvalues; nothing to fit")
    devs, rows = [], []
    for g in gammas:
        sol = corners.stabilized_lowest(poly, g, 1, rtol=float(cfg["rtol"]), hint=g * g * model.eigenvalues[0],
                                        node_cap=int(cfg["node_cap"]))
        d = float(sol.result.eigenvalues[0] - g * g * model.eigenvalues[0])
        devs.append(d)
        rows.append((g, sol.result.eigenvalues[0], g * g * model.eigenvalues[0], d, sol.mesh.n_nodes))
    fit = corners.rate_fit(gammas, devs, poly.is_straight)
    cfg_out = dict(cfg)
    path = write_csv(_out(cfg) / "rates.csv", "rates", cfg_out,
                     ["gamma", "E1_fem", "E1_model", "deviation", "mesh_nodes"], rows)
    with path.open("a") as f:
        f.write(f"# fit: kind={fit.kind} slope={fit.slope!r} intercept={fit.intercept!r} r2={fit.r2!r}\n")
    print(f"{fit.kind} fit: slope={fit.slope:.4f} intercept={fit.intercept:.4f} R2={fit.r2:.4f}")
    return EXIT_OK


MESH_DEFAULTS = dict(action=None, source=None, h="0.1", levels="0", out="out/mesh")


def cmd_mesh(args) -> int:
    cfg = _resolve(args, MESH_DEFAULTS, "mesh")
    action, src = cfg["action"], cfg["source"]
    if action not in ("import", "export", "inspect") or src is None:
        raise UsageError("usage: mesh {import,export,inspect} SOURCE")
    if action == "export":
        poly = load_polygon(src)
        m = mesh.mesh_polygon(poly, mesh.GradingPolicy(float(cfg["h"]), levels=int(cfg["levels"])))
        files = mesh_io.export_mesh(m, cfg["out"])
        print("wrote " + " ".join(str(f) for f in files))
        return EXIT_OK
    m = mesh_io.import_mesh(src)
    if action == "import":
        files = mesh_io.export_mesh(m, cfg["out"])
        print("wrote " + " ".join(str(f) for f in files))
    ang = m.min_angles()
    print(f"nodes={m.n_nodes} triangles={m.n_triangles} area={m.area():.12g} "
          f"robin_length={m.boundary_length(mesh.ROBIN):.12g} "
          f"dirichlet_length={m.boundary_length(mesh.DIRICHLET):.12g} "
          f"h_max={m.h_max():.6g} min_angle={ang.min():.3f}")
    return EXIT_OK


# ----------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="robinspec", description="Robin Laplacian spectra on curvilinear polygons.")
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", help="INI file with a section per command")
        sp.add_argument("--out", help="output directory")

    s = sub.add_parser("sector", help="sector eigenvalues below the essential spectrum")
    common(s)
    s.add_argument("--alpha", help="half-angle, e.g. 0.785 or pi/4")
    s.add_argument("--tol")
    s.add_argument("--refinements")
    s.add_argument("--h")
    s.set_defaults(func=cmd_sector)

    s = sub.add_parser("corners", help="lowest eigenvalues against the corner model sum")
    common(s)
    s.add_argument("--poly", help="polygon file or shipped example name")
    s.add_argument("--gammas")
    s.add_argument("--rtol")
    s.add_argument("--beta-exp", dest="beta_exp")
    s.add_argument("--node-cap", dest="node_cap")
    s.set_defaults(func=cmd_corners)

    s = sub.add_parser("weyl", help="eigenvalue counts against the Weyl asymptotics")
    common(s)
    s.add_argument("--poly")
    s.add_argument("--regime", choices=("bulk", "edge"))
    s.add_argument("--param", help="E for bulk, lambda for edge")
    s.add_argument("--gammas")
    s.add_argument("--order")
    s.add_argument("--node-cap", dest="node_cap")
    s.add_argument("--layer-cells", dest="layer_cells", help="boundary cells per 1/gamma on the accepted level")
    s.set_defaults(func=cmd_weyl)

    s = sub.add_parser("model1d", help="one-dimensional secular roots and finite-difference check")
    common(s)
    s.add_argument("--kind", choices=model1d.KINDS)
    s.add_argument("--gamma")
    s.add_argument("--l")
    s.add_argument("--beta")
    s.add_argument("--grid-n", dest="grid_n")
    s.set_defaults(func=cmd_model1d)

    s = sub.add_parser("rates", help="fit the decay of E_1 - gamma^2 E_1(model) over gamma")
    common(s)
    s.add_argument("--poly")
    s.add_argument("--gammas")
    s.add_argument("--rtol")
    s.add_argument("--node-cap", dest="node_cap")
    s.set_defaults(func=cmd_rates)

    s = sub.add_parser("mesh", help="mesh import/export/inspect (Triangle format)")
    common(s)
    s.add_argument("action", nargs="?", choices=("import", "export", "inspect"))
    s.add_argument("source", nargs="?", help="polygon (export) or .node file / stem")
    s.add_argument("--h")
    s.add_argument("--levels")
    s.set_defaults(func=cmd_mesh)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return EXIT_USAGE
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (geometry.GeometryError, mesh_io.MeshFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except mesh.MeshBudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (eig.EigenSolverError, sector.SectorError, quasimode.QuasiModeError,
            quasimode.CertificateError, mesh.MeshError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
