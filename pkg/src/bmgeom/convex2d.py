"""Planar convex polygons: moments, gauges, Hausdorff distance, inertia ellipses.

Polygons are stored as CCW strictly convex vertex arrays. The Binet-Legendre
ellipse of a body K with centroid c and area A is

    E(K) = {v : (v - c)^T G^{-1} (v - c) <= 1},   G = (n + 2) / A * M,

where M is the second-moment matrix of K about c and n = 2. G is the Gram
matrix of the inner product on linear functionals; E(K) is the polar of that
form's unit ball, which is why the shape matrix is G^{-1}. With this
convention an ellipse is its own inertia ellipse.
"""
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import kernels
from .errors import Degenerate, OriginOutside

TAU_GEOM = 1e-9
TAU_NUM = 1e-7


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """CCW strictly convex polygon. Build with :func:`make_polygon`."""

    vertices: np.ndarray

    def __len__(self):
        return self.vertices.shape[0]

    @cached_property
    def support(self):
        return kernels.support_layout(self.vertices)

    @cached_property
    def gauge_data(self):
        require_origin_inside(self)
        return kernels.gauge_layout(self.vertices)

    @cached_property
    def min_offset(self):
        """Smallest signed distance from the origin to an edge line."""
        return float(self.support[5].min())


@dataclass(frozen=True, eq=False)
class Ellipse:
    """The set {v : (v - center)^T shape (v - center) <= 1}."""

    center: np.ndarray
    shape: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.shape, dtype=float)
        if not np.allclose(s, s.T, atol=TAU_NUM):
            raise ValueError("ellipse shape matrix is not symmetric")
        if np.linalg.eigvalsh(0.5 * (s + s.T)).min() <= TAU_NUM:
            raise ValueError("ellipse shape matrix is not positive definite")

    @property
    def semi_axes(self):
        """Semi-axis lengths, ascending."""
        return np.sort(1.0 / np.sqrt(np.linalg.eigvalsh(self.shape)))

    def contains(self, pts, tol=TAU_NUM):
        d = np.atleast_2d(pts) - self.center
        return np.einsum("ij,jk,ik->i", d, self.shape, d) <= 1.0 + tol


@dataclass(frozen=True, eq=False)
class MomentForm:
    """Gram matrix of <phi, psi>_K on the dual basis."""

    gram: np.ndarray


@dataclass(frozen=True, eq=False)
class Transform2:
    """Affine map x -> linear @ x + translation."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        if abs(np.linalg.det(self.linear)) <= TAU_NUM:
            raise ValueError("transform is not invertible")

    @classmethod
    def identity(cls):
        return cls(np.eye(2), np.zeros(2))

    def apply(self, pts):
        return np.asarray(pts, dtype=float) @ self.linear.T + self.translation

    def __matmul__(self, other):
        """Composition ``self @ other`` = apply ``other`` first."""
        return Transform2(self.linear @ other.linear,
                          self.linear @ other.translation + self.translation)

    def inverse(self):
        inv = np.linalg.inv(self.linear)
        return Transform2(inv, -inv @ self.translation)

    def to_dict(self):
        return {"linear": self.linear.tolist(), "translation": self.translation.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["linear"], dtype=float), np.array(d["translation"], dtype=float))


def _cross(a, b):
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def _clean_ccw(v):
    """Drop near-duplicate and collinear vertices from a CCW cycle."""
    v = np.asarray(v, dtype=float)
    changed = True
    while changed and len(v) >= 3:
        changed = False
        d = np.linalg.norm(np.roll(v, -1, axis=0) - v, axis=1)
        keep = d > TAU_GEOM
        if not keep.all():
            v = v[keep]
            changed = True
            continue
        cr = _cross(v - np.roll(v, 1, axis=0), np.roll(v, -1, axis=0) - v)
        bad = cr <= TAU_GEOM
        if bad.any():
            # remove one at a time: the flattest vertex first
            v = np.delete(v, int(np.argmin(cr)), axis=0)
            changed = True
    return v


def _validated(v):
    v = np.array(v, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
        raise Degenerate("polygon needs at least 3 vertices")
    if not np.isfinite(v).all():
        raise Degenerate("polygon vertices must be finite")
    x, y = v[:, 0], v[:, 1]
    area = 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))
    if area < TAU_GEOM:
        raise Degenerate(f"polygon area {area:.3g} is below tolerance")
    v.setflags(write=False)
    return ConvexPolygon(v)


def make_polygon(points):
    """Convex hull of ``points`` as a CCW strictly convex polygon.

    Accepts CW or unsorted input. Raises :class:`Degenerate` for collinear or
    near-zero-area point sets.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise Degenerate("need at least 3 planar points")
    try:
        hull = ConvexHull(pts)
    except QhullError as exc:
        raise Degenerate(f"points do not span a planar body: {exc}") from None
    v = _clean_ccw(pts[hull.vertices])
    if len(v) < 3:
        raise Degenerate("hull has fewer than 3 vertices")
    return _validated(v)


def polygon_from_ccw(vertices):
    """Wrap vertices already known to be CCW and strictly convex."""
    return _validated(vertices)


def transform_polygon(P, T):
    v = T.apply(P.vertices)
    if np.linalg.det(T.linear) < 0:
        v = v[::-1]
    return _validated(v)


def translate(P, t):
    return transform_polygon(P, Transform2(np.eye(2), np.asarray(t, dtype=float)))


def scale(P, s):
    return transform_polygon(P, Transform2(s * np.eye(2), np.zeros(2)))


def regular_polygon(m, radius=1.0, phase=0.0, center=(0.0, 0.0)):
    t = phase + 2.0 * np.pi * np.arange(m) / m
    v = radius * np.stack((np.cos(t), np.sin(t)), axis=1) + np.asarray(center, dtype=float)
    return _validated(v)


def disc(m=1024, radius=1.0):
    """Inscribed regular m-gon standing in for the Euclidean disc."""
    return regular_polygon(m, radius)


def _mass_properties(P):
    v = P.vertices
    ref = v.mean(axis=0)
    x, y = (v - ref).T
    x1, y1 = np.roll(x, -1), np.roll(y, -1)
    cr = x * y1 - x1 * y
    area = 0.5 * cr.sum()
    cx = ((x + x1) * cr).sum() / (6.0 * area)
    cy = ((y + y1) * cr).sum() / (6.0 * area)
    ixx = ((x * x + x * x1 + x1 * x1) * cr).sum() / 12.0
    iyy = ((y * y + y * y1 + y1 * y1) * cr).sum() / 12.0
    ixy = ((x * y1 + 2.0 * x * y + 2.0 * x1 * y1 + x1 * y) * cr).sum() / 24.0
    m = np.array([[ixx - area * cx * cx, ixy - area * cx * cy],
                  [ixy - area * cx * cy, iyy - area * cy * cy]])
    return float(area), m, ref + np.array([cx, cy])


def centroid(P):
    return _mass_properties(P)[2]


def area_and_moments(P):
    """Area and second-moment matrix about the centroid, both exact."""
    area, m, _ = _mass_properties(P)
    return area, m


def moment_form(P):
    area, m, _ = _mass_properties(P)
    return MomentForm((2 + 2) / area * m)


def require_origin_inside(P):
    if P.min_offset <= TAU_GEOM:
        raise OriginOutside(f"origin is not interior (margin {P.min_offset:.3g})")


def gauge(P, pts):
    """Minkowski gauge of P at each point (rows of ``pts``)."""
    return kernels.gauge_many(P.gauge_data, np.atleast_2d(pts))


def gauge_radial(P, u):
    """Largest t >= 0 with t u in P."""
    u = np.asarray(u, dtype=float)
    return float(1.0 / gauge(P, u[None, :])[0])


def inclusion_scale(P, Q):
    """Least lambda >= 0 with Q contained in lambda P (homothety about 0)."""
    require_origin_inside(P)
    require_origin_inside(Q)
    spq, _ = kernels.ratio_sweep(P.support, Q.support, np.zeros(1))
    return float(spq[0])


def minkowski_symmetrize(P):
    """Vertices of (P + (-P)) / 2, which is symmetric about 0."""
    A = P.support
    B = polygon_from_ccw(-P.vertices).support
    ea = [np.roll(A[k], -1) - A[k] for k in (0, 1)]
    eb = [np.roll(B[k], -1) - B[k] for k in (0, 1)]
    ang = np.concatenate((A[4], B[4]))
    ex = np.concatenate((ea[0], eb[0]))
    ey = np.concatenate((ea[1], eb[1]))
    order = np.argsort(ang, kind="stable")
    start = np.array([A[0][0] + B[0][0], A[1][0] + B[1][0]])
    steps = np.stack((ex[order], ey[order]), axis=1)
    pts = start + np.concatenate((np.zeros((1, 2)), np.cumsum(steps[:-1], axis=0)))
    return _validated(_clean_ccw(0.5 * pts))


def _spd_sqrt(a, inverse=False):
    w, vecs = np.linalg.eigh(0.5 * (a + a.T))
    w = np.sqrt(w)
    if inverse:
        w = 1.0 / w
    return (vecs * w) @ vecs.T


def _whitened(P, metric):
    if metric is None:
        return P
    w = _spd_sqrt(np.asarray(metric.shape, dtype=float))
    return transform_polygon(P, Transform2(w, np.zeros(2)))


def hausdorff_distance(P, Q, metric=None):
    """Hausdorff distance in the norm whose unit ball is ``metric`` - center.

    Evaluated exactly as the sup-norm of the difference of support functions,
    which for convex sets equals the Hausdorff distance.
    """
    P, Q = _whitened(P, metric), _whitened(Q, metric)
    return float(kernels.hausdorff_sweep(P.support, Q.support, np.zeros(1))[0])


def _point_to_convex(pts, Q):
    """Euclidean distance from each point to the convex polygon Q."""
    v = Q.vertices
    a = v[None, :, :]
    e = (np.roll(v, -1, axis=0) - v)[None, :, :]
    p = pts[:, None, :]
    t = np.clip(np.einsum("ijk,ijk->ij", p - a, e) / np.einsum("ijk,ijk->ij", e, e), 0.0, 1.0)
    d = np.linalg.norm(p - (a + t[..., None] * e), axis=2).min(axis=1)
    inside = (_cross(e, p - a) >= 0).all(axis=1)
    return np.where(inside, 0.0, d)


def hausdorff_vertex_form(P, Q, metric=None):
    """Same quantity as :func:`hausdorff_distance` by vertex-to-set distances.

    The directed distance from a convex set is a convex function maximised at
    a vertex, so checking vertices suffices. O(n m); used to cross-check.
    """
    P, Q = _whitened(P, metric), _whitened(Q, metric)
    return float(max(_point_to_convex(P.vertices, Q).max(),
                     _point_to_convex(Q.vertices, P).max()))


def binet_legendre_ellipse(P):
    area, m, c = _mass_properties(P)
    gram = 4.0 / area * m
    return Ellipse(center=c, shape=np.linalg.inv(gram))


def bl_transform(P):
    """The affine map sending cent(P) to 0 and E(P) to the unit disc."""
    area, m, c = _mass_properties(P)
    w = _spd_sqrt(4.0 / area * m, inverse=True)
    return Transform2(w, -w @ c)


def bl_normalize(P):
    """(T(P), T) with T from :func:`bl_transform`."""
    T = bl_transform(P)
    return transform_polygon(P, T), T


def bl_linear_whitening(P):
    """Linear part only: the SPD map taking E(P) - cent(P) to the unit disc."""
    area, m, _ = _mass_properties(P)
    return _spd_sqrt(4.0 / area * m, inverse=True)
