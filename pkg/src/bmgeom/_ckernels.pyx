# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops for planar convex polygons.

All polygons arrive in *support layout* (see ``bmgeom.kernels``): CCW
vertices rotated so that edge 0 has the smallest outward-normal angle, with
per-edge unit normals, normal angles ascending in [0, 2pi) and support
offsets. The pure-numpy twin lives in ``_pykernels.py`` and must agree to
rounding.
"""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free
from libc.math cimport cos, sin, fabs, sqrt, atan2, INFINITY, M_PI

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI


cdef inline Py_ssize_t _wrap_start(const double[::1] ang, double theta) noexcept nogil:
    # first index whose rotated angle wraps past 2pi; len(ang) if none does
    cdef Py_ssize_t lo = 0, hi = ang.shape[0], mid
    cdef double cut = TWO_PI - theta
    while lo < hi:
        mid = (lo + hi) >> 1
        if ang[mid] >= cut:
            hi = mid
        else:
            lo = mid + 1
    return lo


cdef inline double _arc_max(double dx, double dy,
                            double ax, double ay, double bx, double by) noexcept nogil:
    # max of |d.u| for u on the arc from a to b (arc shorter than pi)
    cdef double fa = fabs(dx * ax + dy * ay)
    cdef double fb = fabs(dx * bx + dy * by)
    cdef double m = fa if fa > fb else fb
    cdef double ca = ax * dy - ay * dx
    cdef double cb = dx * by - dy * bx
    if (ca >= 0.0 and cb >= 0.0) or (ca <= 0.0 and cb <= 0.0):
        return sqrt(dx * dx + dy * dy)
    return m


cdef double _hausdorff_one(const double[::1] pvx, const double[::1] pvy,
                           const double[::1] pnx, const double[::1] pny,
                           const double[::1] pang,
                           const double[::1] qvx, const double[::1] qvy,
                           const double[::1] qnx, const double[::1] qny,
                           const double[::1] qang,
                           double theta) noexcept nogil:
    cdef Py_ssize_t n = pang.shape[0], m = qang.shape[0]
    cdef double c = cos(theta), s = sin(theta)
    cdef Py_ssize_t start = _wrap_start(qang, theta)
    cdef double shift = -TWO_PI
    if start == m:
        start = 0
        shift = 0.0
    cdef Py_ssize_t i = 0, t = 0, cp = 0, cq = start, j
    cdef double prev = 0.0, ux = 1.0, uy = 0.0
    cdef double nextp, nextq, vx, vy, wx, wy, best = 0.0, val
    cdef double nux, nuy
    while i < n or t < m:
        nextp = pang[i] if i < n else INFINITY
        if t < m:
            j = start + t
            if j >= m:
                j -= m
                nextq = qang[j] + theta
            else:
                nextq = qang[j] + theta + shift
        else:
            nextq = INFINITY
        wx = c * qvx[cq] - s * qvy[cq]
        wy = s * qvx[cq] + c * qvy[cq]
        vx = pvx[cp] - wx
        vy = pvy[cp] - wy
        if nextp <= nextq:
            nux = pnx[i]
            nuy = pny[i]
            val = _arc_max(vx, vy, ux, uy, nux, nuy)
            i += 1
            cp = i if i < n else 0
        else:
            nux = c * qnx[j] - s * qny[j]
            nuy = s * qnx[j] + c * qny[j]
            val = _arc_max(vx, vy, ux, uy, nux, nuy)
            t += 1
            cq = j + 1
            if cq >= m:
                cq = 0
        if val > best:
            best = val
        ux = nux
        uy = nuy
    wx = c * qvx[cq] - s * qvy[cq]
    wy = s * qvx[cq] + c * qvy[cq]
    val = _arc_max(pvx[cp] - wx, pvy[cp] - wy, ux, uy, 1.0, 0.0)
    if val > best:
        best = val
    return best


def hausdorff_sweep(P, Q, const double[::1] thetas):
    """Hausdorff distance between P and R(theta) Q for every theta."""
    cdef const double[::1] pvx = P[0], pvy = P[1], pnx = P[2], pny = P[3], pang = P[4]
    cdef const double[::1] qvx = Q[0], qvy = Q[1], qnx = Q[2], qny = Q[3], qang = Q[4]
    cdef Py_ssize_t k, T = thetas.shape[0]
    out = np.empty(T, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for k in range(T):
            o[k] = _hausdorff_one(pvx, pvy, pnx, pny, pang,
                                  qvx, qvy, qnx, qny, qang, thetas[k])
    return out


cdef void _ratio_one(const double[::1] pvx, const double[::1] pvy,
                     const double[::1] pnx, const double[::1] pny,
                     const double[::1] pang, const double[::1] poff,
                     const double[::1] qvx, const double[::1] qvy,
                     const double[::1] qnx, const double[::1] qny,
                     const double[::1] qang, const double[::1] qoff,
                     double theta, double* spq, double* sqp) noexcept nogil:
    cdef Py_ssize_t n = pang.shape[0], m = qang.shape[0]
    cdef double c = cos(theta), s = sin(theta)
    cdef Py_ssize_t start = _wrap_start(qang, theta)
    cdef double shift = -TWO_PI
    if start == m:
        start = 0
        shift = 0.0
    cdef Py_ssize_t i = 0, t = 0, cp = 0, cq = start, j
    cdef double nextp, nextq, wx, wy, nux, nuy, h
    cdef double a = 0.0, b = 0.0
    while i < n or t < m:
        nextp = pang[i] if i < n else INFINITY
        if t < m:
            j = start + t
            if j >= m:
                j -= m
                nextq = qang[j] + theta
            else:
                nextq = qang[j] + theta + shift
        else:
            nextq = INFINITY
        if nextp <= nextq:
            # support of R Q along P's normal i, over P's offset
            wx = c * qvx[cq] - s * qvy[cq]
            wy = s * qvx[cq] + c * qvy[cq]
            h = (wx * pnx[i] + wy * pny[i]) / poff[i]
            if h > a:
                a = h
            i += 1
            cp = i if i < n else 0
        else:
            nux = c * qnx[j] - s * qny[j]
            nuy = s * qnx[j] + c * qny[j]
            h = (pvx[cp] * nux + pvy[cp] * nuy) / qoff[j]
            if h > b:
                b = h
            t += 1
            cq = j + 1
            if cq >= m:
                cq = 0
    spq[0] = a
    sqp[0] = b


def ratio_sweep(P, Q, const double[::1] thetas):
    """Inclusion scales between P and R(theta) Q for every theta.

    Returns ``(s_pq, s_qp)`` where ``s_pq[k]`` is the least s with
    R Q in s P and ``s_qp[k]`` the least s with P in s R Q (origin fixed).
    """
    cdef const double[::1] pvx = P[0], pvy = P[1], pnx = P[2], pny = P[3], pang = P[4], poff = P[5]
    cdef const double[::1] qvx = Q[0], qvy = Q[1], qnx = Q[2], qny = Q[3], qang = Q[4], qoff = Q[5]
    cdef Py_ssize_t k, T = thetas.shape[0]
    a = np.empty(T, dtype=np.float64)
    b = np.empty(T, dtype=np.float64)
    cdef double[::1] av = a, bv = b
    with nogil:
        for k in range(T):
            _ratio_one(pvx, pvy, pnx, pny, pang, poff,
                       qvx, qvy, qnx, qny, qang, qoff,
                       thetas[k], &av[k], &bv[k])
    return a, b


def gauge_many(G, const double[:, ::1] pts):
    """Minkowski gauge of each row of ``pts`` w.r.t. a polygon in gauge layout.

    ``G`` is ``(polar_angles, nx, ny, off)``: vertex polar angles ascending in
    [-pi, pi) and, for slot k, the edge spanning angles [pa[k], pa[k+1]).
    """
    cdef const double[::1] pa = G[0], nx = G[1], ny = G[2], off = G[3]
    cdef Py_ssize_t n = pa.shape[0], N = pts.shape[0], k, lo, hi, mid
    out = np.empty(N, dtype=np.float64)
    cdef double[::1] o = out
    cdef double x, y, a
    with nogil:
        for k in range(N):
            x = pts[k, 0]
            y = pts[k, 1]
            if x == 0.0 and y == 0.0:
                o[k] = 0.0
                continue
            a = atan2(y, x)
            lo = 0
            hi = n
            while lo < hi:
                mid = (lo + hi) >> 1
                if pa[mid] <= a:
                    lo = mid + 1
                else:
                    hi = mid
            # lo-1 is the last vertex at or before a; -1 wraps to the last slot
            lo -= 1
            if lo < 0:
                lo = n - 1
            o[k] = (nx[lo] * x + ny[lo] * y) / off[lo]
    return out


def disc_ratio(L, double ox, double oy, double ix, double iy, double a, double b, double d):
    """Radius of S P about S o over inradius of S P about S i, S = [[a, b], [b, d]].

    ``L`` is a support layout of P; S must be symmetric with det 1. Returns
    inf when i is not interior.
    """
    cdef const double[::1] vx = L[0], vy = L[1], nx = L[2], ny = L[3], off = L[5]
    cdef Py_ssize_t k, n = vx.shape[0]
    cdef double px, py, ux, uy, mx, my, r2 = 0.0, rin = INFINITY, h
    with nogil:
        for k in range(n):
            px = vx[k] - ox
            py = vy[k] - oy
            ux = a * px + b * py
            uy = b * px + d * py
            h = ux * ux + uy * uy
            if h > r2:
                r2 = h
            mx = d * nx[k] - b * ny[k]
            my = -b * nx[k] + a * ny[k]
            h = (off[k] - nx[k] * ix - ny[k] * iy) / sqrt(mx * mx + my * my)
            if h < rin:
                rin = h
    if rin <= 1e-9:
        return INFINITY
    return sqrt(r2) / rin


cdef double _max_gauge(const double *vx, const double *vy, const double *rx, const double *ry,
                       Py_ssize_t n, const double *px, const double *py, Py_ssize_t m,
                       double *ang) noexcept nogil:
    # polygon given CCW about 0, slot k = edge from vertex k to k + 1 with
    # (rx, ry) = normal / offset; vertex polar angles are cyclically sorted
    cdef Py_ssize_t k, s = 0, j, lo, hi, mid
    cdef double best = 0.0, a, g, x, y
    for k in range(n):
        ang[k] = atan2(vy[k], vx[k])
        if ang[k] < ang[s]:
            s = k
    for j in range(m):
        x = px[j]
        y = py[j]
        if x == 0.0 and y == 0.0:
            continue
        a = atan2(y, x)
        lo = 0
        hi = n
        while lo < hi:
            mid = (lo + hi) >> 1
            if ang[(s + mid) % n] <= a:
                lo = mid + 1
            else:
                hi = mid
        lo -= 1
        if lo < 0:
            lo = n - 1
        k = (s + lo) % n
        g = rx[k] * x + ry[k] * y
        if g > best:
            best = g
    return best


def nesting_ratio(P, Q, double a, double b, double c, double d,
                  double tx, double ty, double ox, double oy):
    """Nesting ratio of P - o and A Q + t - o from gauges of vertices.

    A = [[a, b], [c, d]] may reverse orientation: edge normals map by A^-T,
    which keeps them outward, and the vertex order is reversed to stay CCW.
    Each gauge is a binary search over polar angle, so the cost is
    O((|P| + |Q|) log) with no re-sorting. Returns inf when o is not
    interior to both bodies.
    """
    cdef const double[::1] pvx = P[0], pvy = P[1], pnx = P[2], pny = P[3], poff = P[5]
    cdef const double[::1] qvx = Q[0], qvy = Q[1], qnx = Q[2], qny = Q[3], qoff = Q[5]
    cdef Py_ssize_t i, j, k, n = pvx.shape[0], m = qvx.shape[0]
    cdef double det = a * d - b * c
    cdef double ia = d / det, ib = -c / det, ic = -b / det, id_ = a / det
    cdef double h, mx, my, s1 = 0.0, s2 = 0.0
    cdef double *buf = <double *> malloc((5 * n + 5 * m) * sizeof(double))
    cdef double *px = buf
    cdef double *py = px + n
    cdef double *prx = py + n
    cdef double *pry = prx + n
    cdef double *qx = pry + n
    cdef double *qy = qx + m
    cdef double *qrx = qy + m
    cdef double *qry = qrx + m
    cdef double *ang = qry + m
    cdef bint bad = False
    if buf == NULL:
        raise MemoryError()
    with nogil:
        for i in range(n):
            h = poff[i] - pnx[i] * ox - pny[i] * oy
            if h <= 1e-9:
                bad = True
                break
            px[i] = pvx[i] - ox
            py[i] = pvy[i] - oy
            prx[i] = pnx[i] / h
            pry[i] = pny[i] / h
        for k in range(m):
            if bad:
                break
            # CCW slot k: vertex j and the edge leaving it
            if det > 0:
                j = k
                i = k
            else:
                j = m - 1 - k
                i = (2 * m - 2 - k) % m
            qx[k] = a * qvx[j] + b * qvy[j] + tx - ox
            qy[k] = c * qvx[j] + d * qvy[j] + ty - oy
            mx = ia * qnx[i] + ib * qny[i]
            my = ic * qnx[i] + id_ * qny[i]
            h = qoff[i] + mx * (tx - ox) + my * (ty - oy)
            if h <= 1e-9 * sqrt(mx * mx + my * my):
                bad = True
                break
            qrx[k] = mx / h
            qry[k] = my / h
        if not bad:
            s1 = _max_gauge(px, py, prx, pry, n, qx, qy, m, ang)
            s2 = _max_gauge(qx, qy, qrx, qry, m, px, py, n, ang)
    free(buf)
    if bad:
        return INFINITY
    return s1 * s2
