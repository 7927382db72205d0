"""Convex polytopes in R^3, their central sections and inertia ellipsoids."""
from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np
from scipy.optimize import least_squares
from scipy.spatial import ConvexHull, QhullError

from . import convex2d as c2
from .convex2d import TAU_GEOM, TAU_NUM
from .errors import Degenerate, OriginOutside
from .metrics import d_bm_disc

E1 = np.array([1.0, 0.0, 0.0])
E3 = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True, eq=False)
class ConvexPolytope3:
    """Hull vertices plus facets as CCW (seen from outside) index cycles.

    ``normals`` are outward unit normals and ``offsets`` the support values,
    so the body is {x : normals @ x <= offsets}.
    """

    vertices: np.ndarray
    facets: tuple
    normals: np.ndarray
    offsets: np.ndarray

    @cached_property
    def edges(self):
        es = set()
        for f in self.facets:
            for a, b in zip(f, np.roll(f, -1)):
                es.add((min(a, b), max(a, b)))
        return np.array(sorted(es), dtype=int)

    @property
    def circumradius(self):
        return float(np.linalg.norm(self.vertices, axis=1).max())


@dataclass(frozen=True, eq=False)
class SectionFrame:
    theta: np.ndarray
    e_u: np.ndarray
    e_v: np.ndarray

    def to_plane(self, pts):
        pts = np.atleast_2d(pts)
        return np.stack((pts @ self.e_u, pts @ self.e_v), axis=1)

    def to_space(self, uv):
        uv = np.atleast_2d(uv)
        return uv[:, :1] * self.e_u + uv[:, 1:2] * self.e_v


@dataclass(frozen=True, eq=False)
class Ellipsoid3:
    """The set {v : (v - center)^T shape (v - center) <= 1}."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.shape, dtype=float)
        if not np.allclose(s, s.T, atol=TAU_NUM) or np.linalg.eigvalsh(s).min() <= TAU_NUM:
            raise ValueError("ellipsoid shape must be symmetric positive definite")

    @property
    def semi_axes(self):
        return np.sort(1.0 / np.sqrt(np.linalg.eigvalsh(self.shape)))


def section_frame(theta):
    """Deterministic orthonormal basis of theta-perp, right-handed with theta."""
    t = np.asarray(theta, dtype=float)
    t = t / np.linalg.norm(t)
    ref = E3 if abs(t @ E3) < 0.9 else E1
    u = np.cross(ref, t)
    u /= np.linalg.norm(u)
    return SectionFrame(t, u, np.cross(t, u))


def _order_facet(idx, pts, normal):
    p = pts[idx]
    c = p.mean(axis=0)
    a = np.cross(normal, p[0] - c)
    a /= np.linalg.norm(a)
    b = np.cross(normal, a)
    ang = np.arctan2((p - c) @ b, (p - c) @ a)
    # (a, b, normal) is right-handed, so ascending angle is CCW from outside
    return idx[np.argsort(ang, kind="stable")]


def make_polytope(points):
    """Convex hull of 3D points with coplanar triangles merged into facets."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or len(pts) < 4:
        raise Degenerate("need at least 4 points in R^3")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise Degenerate(f"points do not span a 3D body: {exc}") from None
    if hull.volume < TAU_GEOM:
        raise Degenerate(f"hull volume {hull.volume:.3g} is below tolerance")
    keep = np.sort(hull.vertices)
    remap = -np.ones(len(pts), dtype=int)
    remap[keep] = np.arange(len(keep))
    verts = pts[keep]
    scale = max(1.0, float(np.abs(verts).max()))
    eqs = hull.equations
    # coplanar triangles are edge-connected: union them along hull neighbours
    parent = list(range(len(eqs)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, nbrs in enumerate(hull.neighbors):
        for j in nbrs:
            if (np.abs(eqs[i, :3] - eqs[j, :3]).max() < 1e-9
                    and abs(eqs[i, 3] - eqs[j, 3]) < 1e-9 * scale):
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    members = {}
    for i in range(len(eqs)):
        members.setdefault(find(i), set()).update(remap[hull.simplices[i]].tolist())
    facets, normals, offsets = [], [], []
    for root in sorted(members):
        n = eqs[root, :3]
        facets.append(_order_facet(np.array(sorted(members[root])), verts, n))
        normals.append(n)
        offsets.append(-eqs[root, 3])
    verts.setflags(write=False)
    return ConvexPolytope3(verts, tuple(facets), np.array(normals), np.array(offsets))


def require_origin_inside(P):
    if P.offsets.min() <= TAU_GEOM:
        raise OriginOutside(f"origin is not interior (margin {P.offsets.min():.3g})")


def central_section(P, theta):
    """P intersected with theta-perp, in the plane coordinates of its frame."""
    require_origin_inside(P)
    fr = section_frame(theta)
    s = P.vertices @ fr.theta
    pts = [P.vertices[np.abs(s) <= TAU_GEOM]]
    e = P.edges
    si, sj = s[e[:, 0]], s[e[:, 1]]
    cut = (si * sj < 0) & (np.abs(si) > TAU_GEOM) & (np.abs(sj) > TAU_GEOM)
    a, b = P.vertices[e[cut, 0]], P.vertices[e[cut, 1]]
    w = (si[cut] / (si[cut] - sj[cut]))[:, None]
    pts.append(a + w * (b - a))
    return c2.make_polygon(fr.to_plane(np.concatenate(pts))), fr


def section_centroid(P, theta):
    """cent(P cap theta-perp) as a 3-vector."""
    poly, fr = central_section(P, theta)
    return fr.to_space(c2.centroid(poly))[0]


# -- icosphere geometry ------------------------------------------------------

def icosphere_geometry(subdiv):
    """Unit vertices and faces of the subdivided icosahedron.

    Midpoints are projected to the sphere after every subdivision step.
    """
    if not 0 <= subdiv <= 6:
        raise ValueError("subdiv must lie in [0, 6]")
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    v = [(-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
         (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
         (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1)]
    f = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
         (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
         (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
         (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    verts = [np.array(p, dtype=float) / np.linalg.norm(p) for p in v]
    faces = f
    for _ in range(subdiv):
        mid = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in mid:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                mid[key] = len(verts) - 1
            return mid[key]

        nf = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            nf += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = nf
    return np.array(verts), np.array(faces, dtype=int)


def _upper(v, tol=1e-12):
    # one representative per antipodal pair
    x, y, z = v
    if abs(z) > tol:
        return z > 0
    if abs(y) > tol:
        return y > 0
    return x > 0


def section_directions(subdiv=3):
    """Icosphere directions with antipodal duplicates removed."""
    v, _ = icosphere_geometry(subdiv)
    return v[[_upper(p) for p in v]]


# -- centred sections ----------------------------------------------------------

@dataclass(frozen=True)
class CenteredSection:
    theta: np.ndarray
    residual: float
    iterations: int


def _tangent(theta):
    fr = section_frame(theta)
    return fr.e_u, fr.e_v


def _winding_faces(verts, faces, field):
    """Faces around which the tangent field turns by a full turn or more.

    The field at the corners is projected to the tangent plane at the face
    centre and the signed angle increments are summed.
    """
    out = []
    for f in faces:
        c = verts[f].sum(axis=0)
        eu, ev = _tangent(c / np.linalg.norm(c))
        ang = np.arctan2(field[f] @ ev, field[f] @ eu)
        d = np.diff(np.append(ang, ang[0]))
        turn = float(((d + np.pi) % (2 * np.pi) - np.pi).sum())
        if abs(turn) > np.pi:
            out.append(c / np.linalg.norm(c))
    return out


MAX_ZERO_LEVEL = 4


def find_centered_section(P, mesh_subdiv=3, max_iter=20, starts=8):
    """Direction theta whose central section has its centroid at 0.

    p(theta) = cent(P cap theta-perp) is a tangent field on the sphere, so
    it has zeros. Starts are the icosphere faces around which p winds, then
    the grid directions of smallest |p|; each start is refined by
    Levenberg-Marquardt in a fixed tangent chart. Narrow basins can slip
    between the vertices of a coarse mesh, so the mesh is refined up to
    level MAX_ZERO_LEVEL before falling back to a grid zoom. The residual is
    reported as found.
    """
    require_origin_inside(P)
    tol = 1e-12 * P.circumradius
    best, nfev, seeds = None, 0, []
    for level in range(mesh_subdiv, max(mesh_subdiv, MAX_ZERO_LEVEL) + 1):
        verts, faces = icosphere_geometry(level)
        field = np.array([section_centroid(P, d) for d in verts])
        res = np.linalg.norm(field, axis=1)
        k = int(np.argmin(res))
        if best is None or res[k] < best[1]:
            best = (verts[k], float(res[k]))
        if best[1] <= TAU_NUM:
            break
        seeds = _winding_faces(verts, faces, field)
        seeds += [verts[i] for i in np.argsort(res, kind="stable")[:2]]
        seeds = seeds[:starts]
        best, n = _polish_seeds(P, seeds, max_iter, best, tol)
        nfev += n
        if best[1] <= tol:
            break
    if best[1] > max(tol, TAU_NUM):
        # steep zeros (origin close to a facet) can sit in basins the linear
        # model never reaches, so a nested grid zoom on |p| is the fallback
        radius = 1.2 * 2.0 ** -max(mesh_subdiv, MAX_ZERO_LEVEL)
        zoomed = []
        for theta0 in seeds:
            theta0, n = _zoom_zero(P, theta0, radius)
            nfev += n
            zoomed.append(theta0)
        best, n = _polish_seeds(P, zoomed, max_iter, best, tol)
        nfev += n
    t, r = best
    if t @ np.array([1e-3, 1e-2, 1.0]) < 0:
        t = -t
    return CenteredSection(t, r, nfev)


def _polish_seeds(P, seeds, max_iter, best, tol):
    nfev = 0
    for theta0 in seeds:
        t, r, n = _polish(P, theta0, max_iter)
        nfev += n
        if r < best[1]:
            best = (t, r)
        if best[1] <= tol:
            break
    return best, nfev


def _polish(P, theta0, max_iter):
    """Levenberg-Marquardt on p in the tangent chart at theta0."""
    sol = least_squares(lambda x: _chart_residual(P, theta0, x), np.zeros(2), method="lm",
                        max_nfev=max_iter * 3, xtol=1e-15, ftol=1e-15, gtol=1e-15)
    out = (theta0, float(np.linalg.norm(section_centroid(P, theta0))))
    t = _chart_direction(theta0, sol.x)
    r = float(np.linalg.norm(section_centroid(P, t)))
    if r < out[1]:
        out = (t, r)
    return out + (int(sol.nfev),)


def _chart_direction(theta0, x):
    eu, ev = _tangent(theta0)
    t = theta0 + x[0] * eu + x[1] * ev
    return t / np.linalg.norm(t)


def _chart_residual(P, theta0, x):
    eu, ev = _tangent(theta0)
    c = section_centroid(P, _chart_direction(theta0, x))
    return np.array([c @ eu, c @ ev])


def _zoom_zero(P, theta, radius, levels=40, n=9):
    """Nested grid search for the smallest |p| around theta.

    Each level scans an n x n chart grid of half-width ``radius`` around the
    current best direction, then shrinks the grid to two cells.
    """
    g = np.linspace(-1.0, 1.0, n)
    best = float(np.linalg.norm(section_centroid(P, theta)))
    evals = 0
    for _ in range(levels):
        centre = theta
        for a in g:
            for b in g:
                t = _chart_direction(centre, (radius * a, radius * b))
                v = float(np.linalg.norm(section_centroid(P, t)))
                evals += 1
                if v < best:
                    best, theta = v, t
        if best < 1e-13 * P.circumradius or radius < 1e-14:
            break
        radius *= 4.0 / (n - 1)
    return theta, evals


# -- inertia ellipsoid -------------------------------------------------------

def _mass_properties3(P):
    ref = P.vertices.mean(axis=0)
    v = P.vertices - ref
    vol = 0.0
    first = np.zeros(3)
    second = np.zeros((3, 3))
    for f in P.facets:
        a = v[f[0]]
        for i in range(1, len(f) - 1):
            b, c = v[f[i]], v[f[i + 1]]
            d = np.linalg.det(np.array([a, b, c])) / 6.0
            s = a + b + c
            vol += d
            first += d * s / 4.0
            second += d / 20.0 * (np.outer(a, a) + np.outer(b, b) + np.outer(c, c) + np.outer(s, s))
    cen = first / vol
    m = second - vol * np.outer(cen, cen)
    return float(vol), m, ref + cen


def centroid3(P):
    return _mass_properties3(P)[2]


def volume_and_moments3(P):
    vol, m, _ = _mass_properties3(P)
    return vol, m


def binet_legendre_3d(P):
    """Inertia ellipsoid: shape = G^{-1} with G = (5 / vol) M, M central moments."""
    vol, m, c = _mass_properties3(P)
    return Ellipsoid3(c, np.linalg.inv(5.0 / vol * m))


def _spd_sqrt(a, inverse=False):
    w, q = np.linalg.eigh(0.5 * (a + a.T))
    w = np.sqrt(w)
    return (q * (1.0 / w if inverse else w)) @ q.T


def bl_whitening3(P):
    """(W, c): x -> W (x - c) maps the inertia ellipsoid to the unit ball."""
    vol, m, c = _mass_properties3(P)
    return _spd_sqrt(5.0 / vol * m, inverse=True), c


def transform_polytope(P, A, t=None):
    t = np.zeros(3) if t is None else np.asarray(t, dtype=float)
    return make_polytope(P.vertices @ np.asarray(A, dtype=float).T + t)


def global_ball_deviation(P):
    """Circumradius over inradius about 0 after centring and whitening.

    An upper estimate of the linear Banach-Mazur distance to the ball.
    """
    W, c = bl_whitening3(P)
    v = (P.vertices - c) @ W.T
    Winv = np.linalg.inv(W)
    n = P.normals @ Winv.T
    off = (P.offsets - P.normals @ c) / np.linalg.norm(n, axis=1)
    return float(np.linalg.norm(v, axis=1).max() / off.min())


def section_bm_values(P, mesh_subdiv=3):
    """(directions, d_BM(P cap theta-perp, disc)) over the pruned icosphere."""
    require_origin_inside(P)
    dirs = section_directions(mesh_subdiv)
    vals = np.array([d_bm_disc(central_section(P, d)[0]).value for d in dirs])
    return dirs, vals


def sections_eps(P, mesh_subdiv=3):
    """max over sampled planes of d_BM(section, disc) - 1."""
    return float(section_bm_values(P, mesh_subdiv)[1].max() - 1.0)


@dataclass(frozen=True)
class OneCenterReport:
    eps_sections: float
    eps_global: float
    ratio: float

    def as_dict(self):
        r = None if math.isnan(self.ratio) else self.ratio
        return {"eps_sections": self.eps_sections, "eps_global": self.eps_global, "ratio": r}


def one_center_report(P, mesh_subdiv=3):
    """Section closeness to the disc against global closeness to the ball.

    ``ratio`` = eps_global / sqrt(eps_sections); NaN when eps_sections is
    below tau_num.
    """
    es = sections_eps(P, mesh_subdiv)
    eg = global_ball_deviation(P) - 1.0
    ratio = eg / math.sqrt(es) if es > TAU_NUM else math.nan
    return OneCenterReport(es, eg, ratio)


# -- bodies ----------------------------------------------------------------------

def cube(half=1.0):
    s = (-half, half)
    return make_polytope([(x, y, z) for x in s for y in s for z in s])


def octahedron(r=1.0):
    return make_polytope(np.concatenate((r * np.eye(3), -r * np.eye(3))))


def ball(subdiv=3):
    """Inscribed icosphere polytope."""
    return make_polytope(icosphere_geometry(subdiv)[0])


def ellipsoid(axes, subdiv=3):
    return make_polytope(icosphere_geometry(subdiv)[0] * np.asarray(axes, dtype=float))


def ball_cube(t, subdiv=3):
    """(1 - t) B + t C: support function (1 - t) h_ball + t h_cube."""
    b = icosphere_geometry(subdiv)[0]
    s = (-1.0, 1.0)
    c = np.array([(x, y, z) for x in s for y in s for z in s])
    return make_polytope(((1.0 - t) * b[:, None, :] + t * c[None, :, :]).reshape(-1, 3))
