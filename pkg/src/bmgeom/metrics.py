"""Distances between planar convex bodies and the explicit constant tables.

Banach-Mazur estimates put both bodies in Binet-Legendre position, search
O(2) on a uniform angle grid and (for the affine distance) polish the best
candidates by coordinate descent. Every value returned is attained by its
witness, so BM values are upper bounds on the true distance.
"""
from dataclasses import dataclass, field
from fractions import Fraction
import math

import numpy as np
from scipy.optimize import minimize

from . import convex2d as c2
from . import kernels
from .convex2d import TAU_NUM, Transform2
from .errors import NotSymmetric, OriginOutside

FLIP = np.diag([1.0, -1.0])


def _rot(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


# -- constants ---------------------------------------------------------------

def _power(base, exponent):
    """base**exponent as a Fraction when rational, else a float."""
    exponent = Fraction(exponent)
    if exponent.denominator == 1:
        return Fraction(base) ** exponent.numerator
    root = round(base ** (1.0 / exponent.denominator))
    if root ** exponent.denominator == base:
        return Fraction(root) ** exponent.numerator
    return base ** float(exponent)


@dataclass(frozen=True)
class ConstantsTable:
    """Sandwich and distance-equivalence constants in dimension n.

    Values are :class:`fractions.Fraction` whenever the formula is rational
    for this n (every n = 2 mod 4), floats otherwise.
    """

    n: int
    a_n: object
    b_n: object
    bhat_n: object
    d_n: object
    bprime_n: object
    c_universal: float = 1.0

    @property
    def C_n(self):
        """c n^(2 n^2), the one-center constant, with c = c_universal."""
        return self.c_universal * float(self.n) ** (2 * self.n * self.n)

    def as_dict(self):
        def enc(x):
            if isinstance(x, Fraction):
                return {"exact": str(x), "value": float(x)}
            return {"exact": None, "value": float(x)}
        return {"n": self.n, "a_n": enc(self.a_n), "b_n": enc(self.b_n),
                "bhat_n": enc(self.bhat_n), "d_n": enc(self.d_n),
                "bprime_n": enc(self.bprime_n),
                "c_universal": self.c_universal, "C_n": self.C_n}


def constants_table(n, c_universal=1.0):
    if n < 2:
        raise ValueError("dimension must be at least 2")
    a = _power(2, Fraction(-n, 2) - 1)
    tail = _power(n, Fraction(-3 * n, 4) - Fraction(3, 2))
    a = a * tail if isinstance(a, Fraction) and isinstance(tail, Fraction) else float(a) * float(tail)
    b = 1 / a
    ratio = b / a
    bprime = 1 + 5 * n * ratio
    bhat = (3 * n + 1) * bprime * b
    d = 4 * n * ratio * bprime
    return ConstantsTable(n, a, b, bhat, d, bprime, c_universal)


A2 = float(constants_table(2).a_n)
B2 = float(constants_table(2).b_n)


# -- estimates ---------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class DistanceEstimate:
    """A distance value with the map that attains it.

    For Banach-Mazur estimates ``witness`` maps L into K's coordinates and
    ``center`` is the homothety centre: K - c and T(L) - c nest with ratio
    ``value``. For the Binet-Legendre distance ``witness`` maps L so that the
    E(K)-Hausdorff distance between K and T(L) equals ``value``.
    """

    value: float
    grid_size: int
    is_upper_bound: bool
    witness: Transform2
    center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    kind: str = "bm"
    inner_center: np.ndarray = None

    def to_dict(self):
        d = {"value": self.value, "grid_size": self.grid_size,
             "is_upper_bound": self.is_upper_bound, "kind": self.kind,
             "witness": self.witness.to_dict(), "center": self.center.tolist()}
        if self.inner_center is not None:
            d["inner_center"] = self.inner_center.tolist()
        return d


def _thetas(grid):
    return 2.0 * np.pi * np.arange(grid) / grid


def bm_ratio(K, M, center=None):
    """Nesting ratio of K and M about ``center``: s(K, M) * s(M, K).

    This is the smallest lambda with K - c in t (M - c) in lambda (K - c) for
    some t > 0.
    """
    c = np.zeros(2) if center is None else np.asarray(center, dtype=float)
    A = kernels.support_layout(K.vertices - c)
    B = kernels.support_layout(M.vertices - c)
    if A[5].min() <= c2.TAU_GEOM or B[5].min() <= c2.TAU_GEOM:
        raise OriginOutside("homothety centre is not interior to both bodies")
    spq, sqp = kernels.ratio_sweep(A, B, np.zeros(1))
    return float(spq[0] * sqp[0])


def replay_bm(K, L, est):
    """Recompute a BM estimate's value from its witness."""
    return bm_ratio(K, c2.transform_polygon(L, est.witness), est.center)


def _sweep_ratio(Ka, La, grid, count=None):
    """Ratios for R(theta) L and R(theta) F L over the grid; shape (2, count).

    Only the first ``count`` grid angles are swept (all by default).
    """
    th = _thetas(grid)[:count]
    out = np.empty((2, len(th)))
    for k, Lk in enumerate(La):
        spq, sqp = kernels.ratio_sweep(Ka, Lk, th)
        out[k] = spq * sqp
    return out


def _linear_setup(K, L):
    c2.require_origin_inside(K)
    c2.require_origin_inside(L)
    SK = c2.bl_linear_whitening(K)
    SL = c2.bl_linear_whitening(L)
    Kw = K.vertices @ SK.T
    Lw = L.vertices @ SL.T
    Lf = (Lw @ FLIP.T)[::-1]
    return SK, SL, kernels.support_layout(Kw), (kernels.support_layout(Lw), kernels.support_layout(Lf))


def d_bm_linear(K, L, grid=2048):
    """Upper estimate of the linear Banach-Mazur distance (origin fixed).

    Both bodies are whitened linearly by their inertia ellipses (no
    translation); the remaining O(2) freedom is searched on ``grid`` angles
    per orientation with exact nesting ratios.
    """
    SK, SL, Ka, La = _linear_setup(K, L)
    lam = _sweep_ratio(Ka, La, grid)
    k, i = np.unravel_index(_first_min(lam), lam.shape)
    R = _rot(2.0 * np.pi * i / grid) @ (FLIP if k else np.eye(2))
    T = Transform2(np.linalg.inv(SK) @ R @ SL, np.zeros(2))
    return DistanceEstimate(max(1.0, float(lam[k, i])), grid, True, T)


def _first_min(lam):
    """Flat index of the first entry within rounding of the minimum."""
    flat = lam.ravel()
    return int(np.flatnonzero(flat <= flat.min() * (1.0 + 1e-12))[0])


def _local_minima(lam, count, period=None):
    """Indices (component, index) of up to ``count`` best circular local minima.

    With ``period`` set, minima repeating every ``period`` indices are
    reported once.
    """
    cands = []
    for k in range(lam.shape[0]):
        row = lam[k]
        is_min = (row <= np.roll(row, 1)) & (row <= np.roll(row, -1))
        if period:
            is_min[period:] = False
        for i in np.flatnonzero(is_min):
            cands.append((row[i], k, int(i)))
    cands.sort()
    return [(k, i) for _, k, i in cands[:count]]


def _stretch(s1, s2):
    # exp of a symmetric traceless matrix: unimodular SPD stretch
    r = math.hypot(s1, s2)
    if r == 0.0:
        return np.eye(2)
    ch, sh = math.cosh(r), math.sinh(r) / r
    return np.array([[ch + sh * s1, sh * s2], [sh * s2, ch - sh * s1]])


def coordinate_descent(f, x0, steps, sweeps=8, min_scale=1e-10, max_moves=12):
    """Minimise f by axis moves of shrinking size.

    At each step size the coordinates are swept up to ``sweeps`` times,
    moving +/- step while the objective strictly drops; then all steps are
    halved, until they fall below ``min_scale`` times their start. Equal
    values keep the current point, so ties resolve toward the start.
    """
    x = np.array(x0, dtype=float)
    fx = f(x)
    steps = np.array(steps, dtype=float)
    stop = min_scale * steps
    while (steps > stop).any():
        for _ in range(sweeps):
            moved = False
            for j in range(len(x)):
                for _move in range(max_moves):
                    best = None
                    for sign in (1.0, -1.0):
                        y = x.copy()
                        y[j] += sign * steps[j]
                        fy = f(y)
                        if fy < fx and (best is None or fy < best[1]):
                            best = (y, fy)
                    if best is None:
                        break
                    x, fx = best
                    moved = True
            if not moved:
                break
        steps *= 0.5
    return x, fx


def minimize_nonsmooth(f, x0, steps, sweeps=8, min_scale=1e-8, restarts=3, fev=100):
    """Coordinate descent followed by restarted Nelder-Mead.

    The objectives here are max/min ratios whose kinks can stall axis moves;
    simplex restarts walk along them. Restarts stop once one fails to improve.
    """
    x, fx = coordinate_descent(f, x0, steps, sweeps, min_scale)
    if len(x) == 0:
        return x, fx
    for _ in range(restarts):
        simplex = np.vstack([x] + [x + 0.5 * s * e for s, e in zip(steps, np.eye(len(x)))])
        r = minimize(f, x, method="Nelder-Mead",
                     options={"initial_simplex": simplex, "xatol": 1e-12, "fatol": 1e-14,
                              "maxfev": fev * len(x), "adaptive": len(x) > 2})
        if not r.fun < fx * (1.0 - 1e-10):
            break
        x, fx = np.array(r.x), float(r.fun)
        steps = np.maximum(np.abs(np.array(steps)) * 0.5, 1e-9)
    return x, fx


def is_centrally_symmetric(P, tol=1e-9):
    """True when P reflected through its centroid coincides with P."""
    c = c2.centroid(P)
    v = P.vertices - c
    scale = float(np.abs(v).max())
    return float(kernels.hausdorff_sweep(kernels.support_layout(v), kernels.support_layout(-v),
                                         np.zeros(1))[0]) <= tol * scale


def shift_layout(lay, t):
    """Support layout of the polygon translated by ``t`` (no re-sorting needed)."""
    vx, vy, nx, ny, ang, off = lay
    return (vx + t[0], vy + t[1], nx, ny, ang, off + nx * t[0] + ny * t[1])


DIRECT_LIMIT = 1 << 15


class _AffineProblem:
    """Nesting ratio of K' - o and R F S L' + w - o, all in K's BL frame.

    Small pairs use the direct vertex-edge scan. Large ones hand the
    rotation to the merge-walk kernel, and translations only shift cached
    layouts.
    """

    def __init__(self, Kw, Lw):
        self.Ka = kernels.support_layout(Kw)
        self.Lw = Lw
        self._cache = {}
        # small pairs: a direct O(nm) scan beats re-sorting L per stretch
        self.direct = len(Kw) * len(Lw) <= DIRECT_LIMIT
        self.La = kernels.support_layout(Lw)
        self._kern = kernels.backend_module(kernels.BACKEND)

    def _base(self, flip, s1, s2):
        key = (flip, s1, s2)
        lay = self._cache.get(key)
        if lay is None:
            v = self.Lw @ ((FLIP if flip else np.eye(2)) @ _stretch(s1, s2)).T
            lay = kernels.support_layout(v[::-1] if flip else v)
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = lay
        return lay

    def maps(self, p, flip):
        theta, ox, oy, wx, wy, s1, s2 = p
        lin = _rot(theta) @ (FLIP if flip else np.eye(2)) @ _stretch(s1, s2)
        return lin, np.array([wx, wy]), np.array([ox, oy])

    def value(self, p, flip):
        if self.direct:
            theta, ox, oy, wx, wy, s1, s2 = p
            # R(theta) F^flip S(s1, s2) in scalars; small arrays cost more here
            r = math.hypot(s1, s2)
            ch, sh = math.cosh(r), (math.sinh(r) / r if r > 0.0 else 1.0)
            a, b, c, d = ch + sh * s1, sh * s2, sh * s2, ch - sh * s1
            if flip:
                c, d = -c, -d
            ct, st = math.cos(theta), math.sin(theta)
            return self._kern.nesting_ratio(
                self.Ka, self.La, ct * a - st * c, ct * b - st * d,
                st * a + ct * c, st * b + ct * d, wx, wy, ox, oy)
        theta, ox, oy, wx, wy, s1, s2 = p
        o = np.array([ox, oy])
        P = shift_layout(self.Ka, -o)
        Q = shift_layout(self._base(flip, s1, s2), _rot(-theta) @ (np.array([wx, wy]) - o))
        if P[5].min() <= c2.TAU_GEOM or Q[5].min() <= c2.TAU_GEOM:
            return math.inf
        spq, sqp = kernels.ratio_sweep(P, Q, np.array([theta]))
        return float(spq[0] * sqp[0])


@dataclass(frozen=True, eq=False)
class BLBody:
    """A polygon in Binet-Legendre position with its cached layouts.

    ``flipped`` is the layout of F K' (F = diag(1, -1)), used for the
    orientation-reversing half of O(2).
    """

    transform: Transform2
    vertices: np.ndarray
    layout: tuple
    flipped: tuple
    symmetric: bool

    @classmethod
    def of(cls, K):
        t = c2.bl_transform(K)
        v = t.apply(K.vertices)
        return cls(t, v, kernels.support_layout(v), kernels.support_layout((v @ FLIP.T)[::-1]),
                   is_centrally_symmetric(K))


def affine_grid(A, B, grid=2048):
    """Nesting ratios of A' and R B' about their centroids on the O(2) grid.

    ``A`` and ``B`` are :class:`BLBody`; the result has shape (2, grid), row 1
    for the reflected copy of B.
    """
    if A.symmetric and B.symmetric and grid % 2 == 0:
        # R(theta + pi) = -R(theta) and -B' = B': half a turn repeats
        half = _sweep_ratio(A.layout, (B.layout, B.flipped), grid, grid // 2)
        return np.concatenate((half, half), axis=1)
    return _sweep_ratio(A.layout, (B.layout, B.flipped), grid)


def _restricted(prob, flip, free):
    def f(q):
        p = np.zeros(7)
        p[free] = q
        return prob.value(p, flip)
    return f


def _affine_estimate(A, B, grid, lam, sweeps, candidates, refine):
    k0, i0 = np.unravel_index(_first_min(lam), lam.shape)
    best_val = float(lam[k0, i0])
    best = (int(k0), np.array([2.0 * np.pi * i0 / grid, 0, 0, 0, 0, 0, 0], dtype=float))
    prob = _AffineProblem(A.vertices, B.vertices)
    if refine:
        inr = float(A.layout[5].min())
        # symmetric pairs: the centre can stay at 0, only angle and stretch move
        free = [0, 5, 6] if A.symmetric and B.symmetric else list(range(7))
        steps = np.array([np.pi / grid, 0.1 * inr, 0.1 * inr, 0.1 * inr, 0.1 * inr, 0.05, 0.05])
        # coarse descent on every candidate, full polish on the winner only
        starts = []
        period = grid // 2 if A.symmetric and B.symmetric and grid % 2 == 0 else None
        for k, i in _local_minima(lam, candidates, period):
            f = _restricted(prob, k, free)
            q0 = np.zeros(len(free))
            q0[0] = 2.0 * np.pi * i / grid
            q, fq = coordinate_descent(f, q0, steps[free], sweeps, 1e-3)
            starts.append((fq, k, q))
        fq, k, q = min(starts, key=lambda s: s[0])
        q, fq = minimize_nonsmooth(_restricted(prob, k, free), q, 0.01 * steps[free], sweeps, 1e-4)
        if fq < best_val:
            p = np.zeros(7)
            p[free] = q
            best_val, best = fq, (k, p)
    k, p = best
    lin, w, o = prob.maps(p, k)
    back = A.transform.inverse()
    T = back @ Transform2(lin, w) @ B.transform
    return DistanceEstimate(max(1.0, best_val), grid, True, T, back.apply(o))


def d_bm_affine(K, L, grid=2048, sweeps=8, candidates=3, refine=True):
    """Upper estimate of the affine Banach-Mazur distance.

    Centres both bodies at their centroids, runs the linear grid search, then
    refines the best ``candidates`` local minima over the angle, the
    homothety centre, the translation of L and a unimodular stretch
    (coordinate descent, then Nelder-Mead). Initial translation step is 0.1 x
    the inradius of K in BL position about its centroid.
    """
    A, B = BLBody.of(K), BLBody.of(L)
    return _affine_estimate(A, B, grid, affine_grid(A, B, grid), sweeps, candidates, refine)


def d_bm_affine_prepared(A, B, grid=2048, sweeps=8, candidates=3, refine=True, lam=None):
    """:func:`d_bm_affine` on bodies already in :class:`BLBody` form."""
    if lam is None:
        lam = affine_grid(A, B, grid)
    return _affine_estimate(A, B, grid, lam, sweeps, candidates, refine)


def d_bm_disc(K, refine=True, sweeps=8):
    """Upper estimate of d_BM(K, B^2) against the exact Euclidean disc.

    After BL normalisation and a unimodular stretch S, the value is the
    circumradius of S K about a point o over its inradius about a point i;
    the two discs are homothetic but need not be concentric. For centrally
    symmetric K both centres stay at the centroid.

    The witness T maps K so that T(K) lies in the disc of radius
    value * r about 0 and contains the disc of radius r about
    ``inner_center``.
    """
    tK = c2.bl_transform(K)
    lay = kernels.support_layout(tK.apply(K.vertices))
    free = [4, 5] if is_centrally_symmetric(K) else list(range(6))

    def embed(q):
        p = np.zeros(6)
        p[free] = q
        return p

    def value(q):
        p = embed(q)
        return kernels.disc_ratio(lay, p[:2], p[2:4], _stretch(p[4], p[5]))

    q = np.zeros(len(free))
    fx = value(q)
    if refine:
        inr = float(lay[5].min())
        steps = np.array([0.1 * inr] * 4 + [0.05, 0.05])[free]
        q, fx = minimize_nonsmooth(value, q, steps, sweeps)
    p = embed(q)
    S = _stretch(p[4], p[5])
    T = Transform2(S, -S @ p[:2]) @ tK
    inner = S @ (p[2:4] - p[:2])
    return DistanceEstimate(max(1.0, float(fx)), 0, True, T, tK.inverse().apply(p[:2]),
                            kind="bm-disc", inner_center=inner)


def replay_disc(K, est):
    """Outer radius about 0 over inner radius about ``inner_center`` of T(K)."""
    lay = kernels.support_layout(est.witness.apply(K.vertices))
    return kernels.disc_ratio(lay, (0.0, 0.0), est.inner_center, np.eye(2))


def d_bl(K, L, grid=2048):
    """Binet-Legendre distance, minimised over a uniform O(2) grid."""
    tK = c2.bl_transform(K)
    tL = c2.bl_transform(L)
    Kw = tK.apply(K.vertices)
    Lw = tL.apply(L.vertices)
    Ka = kernels.support_layout(Kw)
    th = _thetas(grid)
    h = np.stack([kernels.hausdorff_sweep(Ka, kernels.support_layout(Lw), th),
                  kernels.hausdorff_sweep(Ka, kernels.support_layout((Lw @ FLIP.T)[::-1]), th)])
    k, i = np.unravel_index(int(np.argmin(h)), h.shape)
    R = _rot(th[i]) @ (FLIP if k else np.eye(2))
    T = tK.inverse() @ Transform2(R, np.zeros(2)) @ tL
    return DistanceEstimate(float(h[k, i]), grid, True, T, c2.centroid(K), kind="bl")


def replay_bl(K, L, est):
    return c2.hausdorff_distance(K, c2.transform_polygon(L, est.witness),
                                 c2.binet_legendre_ellipse(K))


# -- von Neumann-Jordan ------------------------------------------------------

@dataclass(frozen=True)
class VNJResult:
    value: float
    x: np.ndarray
    y: np.ndarray
    grid_size: int


def _require_symmetric(K, grid):
    th = _thetas(grid)
    u = np.stack((np.cos(th), np.sin(th)), axis=1)
    g = c2.gauge(K, np.concatenate((u, -u)))
    ratio = g[:grid] / g[grid:]
    if np.abs(ratio - 1.0).max() > TAU_NUM:
        raise NotSymmetric(f"gauge asymmetry {np.abs(ratio - 1.0).max():.3g} exceeds tolerance")


def vnj_search(K, grid=2048, chunk=256):
    """Grid search for the von Neumann-Jordan constant, with its witness pair.

    Unit vectors x, y of the norm with unit ball K run over ``grid``
    directions each. The value converges to C_NJ from below.
    """
    c2.require_origin_inside(K)
    _require_symmetric(K, grid)
    th = _thetas(grid)
    u = np.stack((np.cos(th), np.sin(th)), axis=1)
    x = u / c2.gauge(K, u)[:, None]
    best = (-1.0, 0, 0)
    for i0 in range(0, grid, chunk):
        xi = x[i0:i0 + chunk]
        s = (xi[:, None, :] + x[None, :, :]).reshape(-1, 2)
        d = (xi[:, None, :] - x[None, :, :]).reshape(-1, 2)
        m = (c2.gauge(K, s) ** 2 + c2.gauge(K, d) ** 2) / 4.0
        m = m.reshape(len(xi), grid)
        v = np.maximum(m, 1.0 / m)
        j = int(np.argmax(v))
        if v.flat[j] > best[0]:
            best = (float(v.flat[j]), i0 + j // grid, j % grid)
    val, i, j = best
    return VNJResult(val, x[i], x[j], grid)


def vnj_constant(K, grid=2048):
    return vnj_search(K, grid).value


def vnj_ratio(K, x, y):
    """max(M, 1/M) for one pair, M the parallelogram quotient of the K-norm."""
    g = c2.gauge(K, np.array([x, y, np.add(x, y), np.subtract(x, y)], dtype=float))
    m = (g[2] ** 2 + g[3] ** 2) / (2.0 * (g[0] ** 2 + g[1] ** 2))
    return float(max(m, 1.0 / m))
