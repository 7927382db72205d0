"""Fields of planar bodies over a triangulated sphere and the scaling experiment.

A field assigns to each mesh vertex x a polygon K_x in the tangent plane
x-perp, written in that vertex's section frame. delta measures how far the
fibres are from being pairwise affinely equivalent and eps how far they are
from ellipses; the experiment fits eps against delta^(1/3).
"""
from dataclasses import dataclass
import math

import numpy as np

from . import convex2d as c2
from . import metrics
from . import sections3d as s3
from .metrics import BLBody

DEFAULT_SEED = 0x5EED


@dataclass(frozen=True, eq=False)
class SphereMesh:
    vertices: np.ndarray
    faces: np.ndarray
    frames: tuple

    @property
    def edges(self):
        f = self.faces
        e = np.concatenate((f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]))
        e.sort(axis=1)
        return np.unique(e, axis=0)

    def edge_length(self):
        """Mean chord length of mesh edges."""
        e = self.edges
        return float(np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1).mean())


def icosphere(subdiv=3):
    """Subdivided icosahedron with a section frame at every vertex."""
    if not 0 <= subdiv <= 6:
        raise ValueError("subdiv must lie in 0..6")
    v, f = s3.icosphere_geometry(subdiv)
    return SphereMesh(v, f, tuple(s3.section_frame(x) for x in v))


@dataclass(frozen=True, eq=False)
class BodyField:
    mesh: SphereMesh
    fibers: tuple


def section_field(P, mesh):
    """The field x -> P cap x-perp."""
    return BodyField(mesh, tuple(s3.central_section(P, x)[0] for x in mesh.vertices))


def _transport(x, y):
    """Minimal rotation taking unit vector y to unit vector x."""
    v = np.cross(y, x)
    c = float(y @ x)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


def continuity_gaps(field):
    """Hausdorff gap across each mesh edge after moving fibre y into x's plane."""
    m = field.mesh
    out = []
    for i, j in m.edges:
        fi, fj = m.frames[i], m.frames[j]
        R = _transport(m.vertices[i], m.vertices[j])
        moved = fi.to_plane(fj.to_space(field.fibers[j].vertices) @ R.T)
        out.append(c2.hausdorff_distance(field.fibers[i], c2.make_polygon(moved)))
    return np.array(out)


@dataclass(frozen=True)
class DeltaReport:
    """Sampled monochromaticity and its anchor-product upper bound.

    ``delta`` = max over sampled pairs of the BM estimate minus 1,
    ``anchor_bound`` = (max_x d(K_x, K_a))^2 - 1 bounds every pair.
    """

    delta: float
    anchor_bound: float
    anchor: int
    pairs: int
    refined: int
    worst_pair: tuple


def _pair_sample(n, budget, seed):
    if budget is None:
        i, j = np.triu_indices(n, 1)
        return np.stack((i, j), axis=1)
    rng = np.random.default_rng(seed)
    if n < 2 or budget <= 0:
        return np.zeros((0, 2), dtype=int)
    i = rng.integers(0, n, size=budget)
    j = rng.integers(0, n - 1, size=budget)
    j = j + (j >= i)
    return np.stack((i, j), axis=1)


def monochromaticity_delta(field, pair_budget=2000, seed=DEFAULT_SEED, grid=2048, anchor=0):
    """delta over an anchor star plus ``pair_budget`` seeded random pairs.

    ``pair_budget=None`` takes every unordered pair instead.

    Every pair first gets its rotation-grid bound; a pair (x, y) may also use
    d(x, a) d(a, y) through the anchor a, which composes two witnesses and so
    is an honest bound too. Pairs are then refined by :func:`d_bm_affine` in
    decreasing order of bound until no unrefined bound can beat the current
    maximum; the result equals refining every pair.
    """
    prep = [BLBody.of(f) for f in field.fibers]
    n = len(prep)
    star = np.ones(n)
    for x in range(n):
        if x != anchor:
            star[x] = affine_grid_min(prep[x], prep[anchor], grid)
    pairs = [(x, anchor) for x in range(n) if x != anchor]
    pairs += [tuple(p) for p in _pair_sample(n, pair_budget, seed).tolist()]
    bound, via = [], []
    for x, y in pairs:
        p = star[x] * star[y] if y != anchor else math.inf
        u = star[x] if y == anchor else affine_grid_min(prep[x], prep[y], grid)
        bound.append(min(u, p))
        via.append(p)
    order = np.argsort(-np.array(bound), kind="stable")
    best, worst, refined = 1.0, (anchor, anchor), 0
    for k in order:
        if bound[k] <= best:
            break
        x, y = pairs[k]
        r = min(metrics.d_bm_affine_prepared(prep[x], prep[y], grid).value, via[k])
        refined += 1
        if r > best:
            best, worst = r, (x, y)
    return DeltaReport(best - 1.0, float(star.max() ** 2 - 1.0), anchor, len(pairs), refined, worst)


def affine_grid_min(A, B, grid):
    return float(metrics.affine_grid(A, B, grid).min())


def ellipse_deviation_eps(field):
    """max over fibres of d_BM(K_x, disc) - 1."""
    return max(metrics.d_bm_disc(f).value for f in field.fibers) - 1.0


@dataclass(frozen=True)
class ExperimentRow:
    t: float
    delta: float
    eps: float


@dataclass(frozen=True)
class ScalingResult:
    rows: tuple
    exponent: float
    c_fit: float
    c_fit_stable: bool
    consistent: bool

    def as_dict(self):
        def num(x):
            return None if math.isnan(x) else x
        return {"rows": [r.__dict__ for r in self.rows], "exponent": num(self.exponent),
                "c_fit": num(self.c_fit), "c_fit_stable": self.c_fit_stable,
                "consistent": self.consistent}


def ball_family(subdiv=3):
    body = s3.ball(subdiv)
    return lambda t: body


def ball_cube_family(subdiv=3):
    return lambda t: s3.ball_cube(t, subdiv)


def ellipsoid_family(subdiv=3):
    return lambda t: s3.ellipsoid((1.0, 1.0, 1.0 + t), subdiv)


FAMILIES = {"ball": ball_family, "ball-cube": ball_cube_family, "ellipsoid": ellipsoid_family}


def fit_scaling(rows):
    """Log-log exponent of eps against delta and c_fit = max eps / delta^(1/3)."""
    pos = [r for r in rows if r.delta > 0 and r.eps > 0]
    exponent = math.nan
    if len(pos) >= 2 and len({r.delta for r in pos}) >= 2:
        exponent = float(np.polyfit(np.log([r.delta for r in pos]),
                                    np.log([r.eps for r in pos]), 1)[0])
    ratios = [r.eps / r.delta ** (1.0 / 3.0) for r in rows if r.delta > 0]
    c_fit = max(ratios) if ratios else math.nan
    stable = bool(ratios) and min(ratios) > 0 and max(ratios) <= 2.0 * min(ratios)
    consistent = all(r.eps <= c_fit * r.delta ** (1.0 / 3.0) * (1 + 1e-12)
                     for r in rows if r.delta > 0)
    return ScalingResult(tuple(rows), exponent, c_fit, bool(stable), bool(consistent))


def scaling_experiment(family, t_values, mesh, pair_budget=2000, seed=DEFAULT_SEED,
                       grid=2048, body_subdiv=3):
    """One (t, delta, eps) row per family member plus the delta^(1/3) fit.

    ``family`` is a name from :data:`FAMILIES` or a callable t -> polytope.
    """
    make = FAMILIES[family](body_subdiv) if isinstance(family, str) else family
    rows = []
    for t in t_values:
        fld = section_field(make(t), mesh)
        d = monochromaticity_delta(fld, pair_budget, seed, grid)
        rows.append(ExperimentRow(float(t), d.delta, ellipse_deviation_eps(fld)))
    return fit_scaling(rows)
