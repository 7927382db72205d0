"""Command-line harness: body files, subcommands, JSON/CSV reports, SVG plots.

Every report stores the parameters that produced it; ``bmgeom replay
report.json`` re-runs them and checks the results match bit for bit.
"""
import argparse
import csv
from dataclasses import dataclass, field
import datetime
import hashlib
import io
import json
import math
import platform
import sys

import numpy as np

from . import __version__
from . import convex2d as c2
from . import isometry as iso
from . import kernels
from . import metrics
from . import sections3d as s3
from . import spherefield as sf
from .errors import (Degenerate, GeometryError, NoStableWindow, ParseError,
                     PreconditionViolated, SeparationViolated)

EXIT_OK, EXIT_INPUT, EXIT_FAILED = 0, 1, 2
SVG_W, SVG_H = 800, 600


class CheckFailed(Exception):
    """A computed quantity failed the check the command promises."""


# -- body files ------------------------------------------------------------------

def _points(raw, dim, path):
    if not isinstance(raw, list):
        raise ParseError("vertices must be a list", path, "vertices")
    out = []
    for i, p in enumerate(raw):
        ok = (isinstance(p, list) and len(p) == dim
              and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in p))
        if not ok:
            raise ParseError(f"expected a list of {dim} numbers", path, f"vertices[{i}]")
        out.append([float(x) for x in p])
    return np.array(out, dtype=float).reshape(-1, dim)


def body_from_dict(doc, path=None):
    if not isinstance(doc, dict):
        raise ParseError("body file must hold a JSON object", path)
    dim = doc.get("dim")
    if dim not in (2, 3):
        raise ParseError("dim must be 2 or 3", path, "dim")
    if "vertices" not in doc:
        raise ParseError("missing vertices", path, "vertices")
    pts = _points(doc["vertices"], dim, path)
    return c2.make_polygon(pts) if dim == 2 else s3.make_polytope(pts)


def parse_body_file(path):
    """Read a body file ``{"dim": 2|3, "vertices": [...], "name": ...}``."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(str(exc), path) from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path, f"line {exc.lineno}") from None
    return body_from_dict(doc, path)


def _builtin(name):
    base, _, arg = name.partition(":")
    if base == "square":
        return c2.make_polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)])
    if base == "triangle":
        return c2.regular_polygon(3)
    if base.startswith("disc"):
        return c2.disc(int(base[4:] or 1024))
    if base == "ngon":
        return c2.regular_polygon(int(arg))
    if base == "cube":
        return s3.cube()
    if base == "octahedron":
        return s3.octahedron()
    if base == "ball":
        return s3.ball(int(arg or 3))
    if base == "ellipsoid":
        return s3.ellipsoid([float(x) for x in arg.split(",")])
    if base == "ball-cube":
        return s3.ball_cube(float(arg))
    raise ParseError(f"unknown builtin body {name!r}")


def load_body(source):
    """A body from a file path or ``builtin:<name>[:args]``."""
    if source is None:
        raise ParseError("a body is required (--a)")
    if source.startswith("builtin:"):
        return _builtin(source[len("builtin:"):])
    return parse_body_file(source)


def _digest(source):
    if source is None or source.startswith("builtin:"):
        return None
    with open(source, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _need(body, dim):
    kind = c2.ConvexPolygon if dim == 2 else s3.ConvexPolytope3
    if not isinstance(body, kind):
        raise ParseError(f"this command needs a {dim}D body")
    return body


# -- reports -----------------------------------------------------------------------

@dataclass
class ReportDocument:
    command: str
    parameters: dict
    results: dict
    provenance: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps({"command": self.command, "parameters": self.parameters,
                           "results": self.results, "provenance": self.provenance},
                          indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["command"], d["parameters"], d["results"], d.get("provenance", {}))


def _clean(x):
    """JSON-safe copy: arrays to lists, NaN and inf to None."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def provenance():
    return {"tool": "bmgeom", "version": __version__, "backend": kernels.BACKEND,
            "python": platform.python_version(), "numpy": np.__version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")}


def write_csv(header, rows, fh):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])


# -- SVG -----------------------------------------------------------------------------

def _fmt(v):
    return f"{v:.3f}"


def _ticks(lo, hi, log):
    if log:
        a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
        return [10.0 ** k for k in range(a, b + 1)]
    step = 10 ** math.floor(math.log10(max(hi - lo, 1e-300)))
    if (hi - lo) / step < 3:
        step /= 2
    k0 = math.ceil(lo / step)
    return [k * step for k in range(k0, int(math.floor(hi / step)) + 1)]


def emit_svg_scatter(rows, curve_spec, path, xlabel="delta", ylabel="eps"):
    """Scatter of (x, y) rows with an optional c x^p reference curve.

    ``curve_spec`` is None or {"c": ..., "power": ..., "label": ...}. Axes are
    log-log when every coordinate is positive, linear otherwise. Output bytes
    depend only on the input.
    """
    pts = [(float(x), float(y)) for x, y in rows]
    if not pts:
        raise ValueError("need at least one row to plot")
    log = all(x > 0 and y > 0 for x, y in pts)
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    curve = []
    if curve_spec is not None:
        lo_x, hi_x = min(xs), max(xs)
        if log:
            grid = [lo_x * (hi_x / lo_x) ** (k / 64) for k in range(65)] if hi_x > lo_x else [lo_x]
        else:
            grid = [lo_x + (hi_x - lo_x) * k / 64 for k in range(65)]
        curve = [(x, curve_spec["c"] * max(x, 0.0) ** curve_spec["power"]) for x in grid]
        ys = ys + [y for _, y in curve if not log or y > 0]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    if log:
        f = lambda v: math.log10(v)
        x0, x1 = x0 / 1.5, x1 * 1.5
        y0, y1 = y0 / 1.5, y1 * 1.5
    else:
        f = lambda v: v
        px, py = 0.05 * (x1 - x0) or 0.5, 0.05 * (y1 - y0) or 0.5
        x0, x1, y0, y1 = x0 - px, x1 + px, y0 - py, y1 + py
    L, R, T, B = 80, 40, 40, 70
    W, H = SVG_W - L - R, SVG_H - T - B

    def sx(v):
        return L + W * (f(v) - f(x0)) / (f(x1) - f(x0))

    def sy(v):
        return T + H * (1 - (f(v) - f(y0)) / (f(y1) - f(y0)))

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{SVG_W}" height="{SVG_H}" '
           f'viewBox="0 0 {SVG_W} {SVG_H}">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<line x1="{L}" y1="{T + H}" x2="{L + W}" y2="{T + H}" stroke="black"/>',
           f'<line x1="{L}" y1="{T}" x2="{L}" y2="{T + H}" stroke="black"/>']
    for v in _ticks(x0, x1, log):
        if x0 <= v <= x1:
            out.append(f'<line x1="{_fmt(sx(v))}" y1="{T + H}" x2="{_fmt(sx(v))}" y2="{T + H + 5}" stroke="black"/>')
            out.append(f'<text x="{_fmt(sx(v))}" y="{T + H + 20}" font-size="12" text-anchor="middle">{v:.3g}</text>')
    for v in _ticks(y0, y1, log):
        if y0 <= v <= y1:
            out.append(f'<line x1="{L - 5}" y1="{_fmt(sy(v))}" x2="{L}" y2="{_fmt(sy(v))}" stroke="black"/>')
            out.append(f'<text x="{L - 8}" y="{_fmt(sy(v) + 4)}" font-size="12" text-anchor="end">{v:.3g}</text>')
    scale = "log-log" if log else "linear"
    out.append(f'<text x="{L + W / 2}" y="{SVG_H - 20}" font-size="14" text-anchor="middle">{xlabel} ({scale})</text>')
    out.append(f'<text x="20" y="{T + H / 2}" font-size="14" text-anchor="middle" '
               f'transform="rotate(-90 20 {T + H / 2})">{ylabel}</text>')
    if curve:
        seg = [(x, y) for x, y in curve if not log or (x > 0 and y > 0)]
        d = " ".join(f"{_fmt(sx(x))},{_fmt(sy(y))}" for x, y in seg)
        out.append(f'<polyline points="{d}" fill="none" stroke="#c33" stroke-width="1.5"/>')
    for x, y in pts:
        out.append(f'<circle cx="{_fmt(sx(x))}" cy="{_fmt(sy(y))}" r="4" fill="#236"/>')
    out.append(f'<circle cx="{L + W - 150}" cy="{T + 10}" r="4" fill="#236"/>')
    out.append(f'<text x="{L + W - 140}" y="{T + 14}" font-size="12">rows</text>')
    if curve:
        label = curve_spec.get("label", "reference")
        out.append(f'<line x1="{L + W - 156}" y1="{T + 30}" x2="{L + W - 144}" y2="{T + 30}" stroke="#c33"/>')
        out.append(f'<text x="{L + W - 140}" y="{T + 34}" font-size="12">{label}</text>')
    out.append("</svg>")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


# -- commands ------------------------------------------------------------------------

def _cmd_constants(a):
    t = metrics.constants_table(a.n, a.c)
    d = t.as_dict()
    rows = [(k, d[k]["exact"], d[k]["value"]) for k in ("a_n", "b_n", "bhat_n", "d_n", "bprime_n")]
    rows.append(("C_n", None, d["C_n"]))
    return d, (["name", "exact", "value"], rows)


def _cmd_bm(a):
    K, L = _need(load_body(a.a), 2), _need(load_body(a.b), 2)
    if a.linear:
        est = metrics.d_bm_linear(K, L, a.grid)
    else:
        est = metrics.d_bm_affine(K, L, a.grid)
    res = est.to_dict()
    res["replayed_value"] = metrics.replay_bm(K, L, est)
    return res, (["value", "replayed_value", "grid"], [(est.value, res["replayed_value"], a.grid)])


def _cmd_bl(a):
    K, L = _need(load_body(a.a), 2), _need(load_body(a.b), 2)
    est = metrics.d_bl(K, L, a.grid)
    res = est.to_dict()
    res["replayed_value"] = metrics.replay_bl(K, L, est)
    return res, (["value", "replayed_value", "grid"], [(est.value, res["replayed_value"], a.grid)])


def _cmd_vnj(a):
    K = _need(load_body(a.a), 2)
    r = metrics.vnj_search(K, a.grid)
    res = {"value": r.value, "x": r.x, "y": r.y, "grid_size": r.grid_size}
    return res, (["value", "grid"], [(r.value, a.grid)])


def _cmd_blellipsoid(a):
    body = load_body(a.a)
    E = c2.binet_legendre_ellipse(body) if isinstance(body, c2.ConvexPolygon) else s3.binet_legendre_3d(body)
    res = {"center": E.center, "shape": E.shape, "semi_axes": E.semi_axes}
    return res, (["axis", "semi_axis"], list(enumerate(E.semi_axes.tolist())))


def _cmd_isoprofile(a):
    K = _need(load_body(a.a), 2)
    p = iso.iso_profile(K, a.grid)
    res = {"grid_size": p.grid_size, "min_positive": p.min_positive(),
           "max_rotation": float(p.dev_rot.max()), "max_reflection": float(p.dev_refl.max()),
           "dev_rot": p.dev_rot, "dev_refl": p.dev_refl}
    rows = zip(p.thetas.tolist(), p.dev_rot.tolist(), p.dev_refl.tolist())
    return res, (["theta", "dev_rot", "dev_refl"], list(rows))


def _cmd_certificate(a):
    K = _need(load_body(a.a), 2)
    r = iso.near_euclidean_certificate(K, a.eps, a.grid)
    res = dict(r.__dict__)
    if not r.sound:
        raise CheckFailed(("certificate fired but verified BM distance "
                           f"{r.verified_bm:.6g} >= 1 + eps + slack"), res)
    return res, (list(res), [tuple(res.values())])


def _stable_curve(a, params):
    if a.curve:
        with open(a.curve, encoding="utf-8") as fh:
            return [(float(x), int(c)) for x, c in json.load(fh)]
    K = _need(load_body(a.a), 2)
    prof = iso.iso_profile(K, a.grid)
    alphas = np.linspace(0.0, params.alpha2, a.samples)[1:]
    counts = iso.cluster_count_curve(prof, params.beta1, alphas)
    return list(zip(alphas.tolist(), counts))


def _cmd_stablewindow(a):
    params = iso.StabilityParams.from_eps(a.eps, a.delta_prime)
    res = {"params": dict(params.__dict__)}
    curve = _stable_curve(a, params)
    res["curve"] = curve
    gamma0 = iso.stable_window_search(curve, params)
    res["gamma0"] = gamma0
    return res, (["gamma0", "alpha3", "delta_prime", "B0"],
                 [(gamma0, params.alpha3, params.delta_prime, params.B0)])


def _theta(text):
    v = np.array([float(x) for x in text.split(",")])
    if v.shape != (3,) or np.linalg.norm(v) == 0:
        raise ParseError("theta must be three comma-separated numbers, not all zero", field="theta")
    return v


def _cmd_section(a):
    P = _need(load_body(a.a), 3)
    poly, fr = s3.central_section(P, _theta(a.theta))
    res = {"vertices": poly.vertices, "theta": fr.theta, "e_u": fr.e_u, "e_v": fr.e_v,
           "area": c2.area_and_moments(poly)[0]}
    return res, (["u", "v"], poly.vertices.tolist())


def _cmd_centeredsection(a):
    P = _need(load_body(a.a), 3)
    r = s3.find_centered_section(P, a.subdiv)
    res = {"theta": r.theta, "residual": r.residual, "evaluations": r.iterations}
    return res, (["theta_x", "theta_y", "theta_z", "residual"], [(*r.theta.tolist(), r.residual)])


def _cmd_onecenter(a):
    P = _need(load_body(a.a), 3)
    r = s3.one_center_report(P, a.subdiv)
    res = r.as_dict()
    res["C_n"] = metrics.constants_table(3, a.c).C_n
    return res, (["eps_sections", "eps_global", "ratio"], [(r.eps_sections, r.eps_global, r.ratio)])


def _cmd_fieldexp(a):
    ts = [float(x) for x in a.t.split(",")]
    mesh = sf.icosphere(a.subdiv)
    out = sf.scaling_experiment(a.family, ts, mesh, a.pairs, a.seed, a.grid)
    res = out.as_dict()
    res["c_universal"] = a.c
    if a.plot:
        curve = None if math.isnan(out.c_fit) else {
            "c": out.c_fit, "power": 1.0 / 3.0, "label": "c_fit delta^(1/3)"}
        emit_svg_scatter([(r.delta, r.eps) for r in out.rows], curve, a.plot)
    return res, (["t", "delta", "eps"], [(r.t, r.delta, r.eps) for r in out.rows])


COMMANDS = {
    "constants": _cmd_constants, "bm": _cmd_bm, "bl": _cmd_bl, "vnj": _cmd_vnj,
    "blellipsoid": _cmd_blellipsoid, "isoprofile": _cmd_isoprofile,
    "certificate": _cmd_certificate, "stablewindow": _cmd_stablewindow,
    "section": _cmd_section, "centeredsection": _cmd_centeredsection,
    "onecenter": _cmd_onecenter, "fieldexp": _cmd_fieldexp,
}

# flags that only steer output, excluded from the replayable parameters
_OUTPUT_FLAGS = {"out", "format", "plot", "command", "report"}


def build_parser():
    p = argparse.ArgumentParser(prog="bmgeom", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_, *opts):
        sp = sub.add_parser(name, help=help_)
        for o in opts:
            o(sp)
        sp.add_argument("--out", help="write the report (or CSV) here instead of stdout")
        sp.add_argument("--format", choices=("json", "csv"), default="json")
        return sp

    body_a = lambda sp: sp.add_argument("--a", help="body file or builtin:<name>")
    body_b = lambda sp: sp.add_argument("--b", help="second body file or builtin:<name>")
    grid = lambda default: (lambda sp: sp.add_argument("--grid", type=int, default=default))
    eps = lambda sp: sp.add_argument("--eps", type=float, default=0.1)
    subdiv = lambda sp: sp.add_argument("--subdiv", type=int, default=3)
    cflag = lambda sp: sp.add_argument("--c", type=float, default=1.0,
                                       help="value for the unspecified universal constant")

    add("constants", "explicit constant table", lambda sp: sp.add_argument("--n", type=int, default=2), cflag)
    add("bm", "Banach-Mazur distance estimate", body_a, body_b, grid(2048),
        lambda sp: sp.add_argument("--linear", action="store_true", help="origin-fixed linear distance"))
    add("bl", "Binet-Legendre distance", body_a, body_b, grid(2048))
    add("vnj", "von Neumann-Jordan constant", body_a, grid(2048))
    add("blellipsoid", "inertia ellipse or ellipsoid", body_a)
    add("isoprofile", "approximate-isometry deviation profile", body_a, grid(4096))
    add("certificate", "near-Euclidean certificate", body_a, eps, grid(4096))
    add("stablewindow", "stable-window search", body_a, eps, grid(4096),
        lambda sp: sp.add_argument("--delta-prime", type=float, required=True),
        lambda sp: sp.add_argument("--curve", help="JSON list of [alpha, count] step data"),
        lambda sp: sp.add_argument("--samples", type=int, default=257))
    add("section", "central section of a 3D body", body_a,
        lambda sp: sp.add_argument("--theta", default="0,0,1"))
    add("centeredsection", "plane through 0 with centred section", body_a, subdiv)
    add("onecenter", "sections versus global closeness to the ball", body_a, subdiv, cflag)
    add("fieldexp", "delta^(1/3) scaling experiment on section fields",
        lambda sp: sp.add_argument("--family", choices=sorted(sf.FAMILIES), default="ball-cube"),
        lambda sp: sp.add_argument("--t", default="0.05,0.1,0.2,0.4"),
        subdiv, grid(2048), cflag,
        lambda sp: sp.add_argument("--pairs", type=int, default=2000),
        lambda sp: sp.add_argument("--seed", type=lambda s: int(s, 0), default=sf.DEFAULT_SEED),
        lambda sp: sp.add_argument("--plot", help="write an SVG scatter here"))
    rp = sub.add_parser("replay", help="re-run a JSON report and compare results")
    rp.add_argument("report")
    return p


def _parameters(a):
    d = {k: v for k, v in vars(a).items() if k not in _OUTPUT_FLAGS}
    for key in ("a", "b"):
        if d.get(key) is not None:
            try:
                d[key + "_sha256"] = _digest(d[key])
            except OSError:
                d[key + "_sha256"] = None
    d["tau_geom"] = c2.TAU_GEOM
    d["tau_num"] = c2.TAU_NUM
    return d


def execute(a):
    """Run one command; returns (exit code, ReportDocument, csv table or None)."""
    params = _parameters(a)
    try:
        res, table = COMMANDS[a.command](a)
        code = EXIT_OK
    except CheckFailed as exc:
        res, table, code = {"error": {"type": "CheckFailed", "message": exc.args[0]},
                            "partial": exc.args[1]}, None, EXIT_FAILED
    except (PreconditionViolated, NoStableWindow, SeparationViolated) as exc:
        res, table, code = {"error": {"type": type(exc).__name__, "message": str(exc)}}, None, EXIT_FAILED
    except (ParseError, GeometryError, OSError, ValueError) as exc:
        res, table, code = {"error": {"type": type(exc).__name__, "message": str(exc)}}, None, EXIT_INPUT
    doc = ReportDocument(a.command, _clean(params), _clean(res), provenance())
    return code, doc, table


def _replay(path):
    with open(path, encoding="utf-8") as fh:
        doc = ReportDocument.from_json(fh.read())
    ns = argparse.Namespace(**{k: v for k, v in doc.parameters.items()
                               if not k.endswith("_sha256") and k not in ("tau_geom", "tau_num")})
    ns.command = doc.command
    ns.out = ns.format = ns.plot = None
    for key in ("a", "b"):
        want = doc.parameters.get(key + "_sha256")
        if want is not None and _digest(getattr(ns, key)) != want:
            return EXIT_FAILED, {"match": False, "reason": f"body file {key} changed"}
    _, again, _ = execute(ns)
    same = again.results == doc.results
    return (EXIT_OK if same else EXIT_FAILED), {"match": same, "command": doc.command}


def main(argv=None):
    a = build_parser().parse_args(argv)
    if a.command == "replay":
        code, res = _replay(a.report)
        sys.stdout.write(json.dumps(res, sort_keys=True) + "\n")
        return code
    code, doc, table = execute(a)
    if a.format == "csv" and table is not None:
        buf = io.StringIO()
        write_csv(table[0], table[1], buf)
        text = buf.getvalue()
    else:
        text = doc.to_json()
    if a.out:
        with open(a.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if code != EXIT_OK:
        sys.stderr.write(f"bmgeom {a.command}: {doc.results['error']['message']}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
