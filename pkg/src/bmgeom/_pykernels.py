"""Pure-numpy versions of the compiled kernels in ``_ckernels.pyx``.

Same inputs, same outputs, same support-layout conventions. Used when the
extension is not built or ``BMGEOM_PURE_PYTHON=1`` is set.
"""
import numpy as np

TWO_PI = 2.0 * np.pi


def _rotated_angles(ang, theta):
    return np.mod(ang + theta, TWO_PI)


def _merge(P, Q, theta):
    """Merged breakpoints of P and R(theta)Q with the active vertex on each arc.

    Returns arc endpoints (k+1,) and for each of the k arcs the index of the
    active vertex in P and in Q.
    """
    pang = P[4]
    qang = _rotated_angles(Q[4], theta)
    brk = np.concatenate(([0.0], np.sort(np.concatenate((pang, qang))), [TWO_PI]))
    mid = 0.5 * (brk[:-1] + brk[1:])
    n = pang.shape[0]
    ip = np.searchsorted(pang, mid) % n
    order = np.argsort(qang, kind="stable")
    iq = order[np.searchsorted(qang[order], mid) % qang.shape[0]]
    return brk, ip, iq


def _arc_max(dx, dy, a, b):
    ax, ay = np.cos(a), np.sin(a)
    bx, by = np.cos(b), np.sin(b)
    fa = np.abs(dx * ax + dy * ay)
    fb = np.abs(dx * bx + dy * by)
    ca = ax * dy - ay * dx
    cb = dx * by - dy * bx
    inside = ((ca >= 0) & (cb >= 0)) | ((ca <= 0) & (cb <= 0))
    return np.where(inside, np.hypot(dx, dy), np.maximum(fa, fb))


def hausdorff_sweep(P, Q, thetas):
    out = np.empty(len(thetas))
    for k, theta in enumerate(thetas):
        c, s = np.cos(theta), np.sin(theta)
        brk, ip, iq = _merge(P, Q, theta)
        wx = c * Q[0][iq] - s * Q[1][iq]
        wy = s * Q[0][iq] + c * Q[1][iq]
        vals = _arc_max(P[0][ip] - wx, P[1][ip] - wy, brk[:-1], brk[1:])
        out[k] = vals.max()
    return out


def ratio_sweep(P, Q, thetas):
    pvx, pvy, pnx, pny, pang, poff = P
    qvx, qvy, qnx, qny, qang, qoff = Q
    spq = np.empty(len(thetas))
    sqp = np.empty(len(thetas))
    for k, theta in enumerate(thetas):
        c, s = np.cos(theta), np.sin(theta)
        rq = _rotated_angles(qang, theta)
        # Q vertex active at each P normal: vertex whose cone holds pang[i]
        order = np.argsort(rq, kind="stable")
        iq = order[np.searchsorted(rq[order], pang) % len(rq)]
        wx = c * qvx[iq] - s * qvy[iq]
        wy = s * qvx[iq] + c * qvy[iq]
        spq[k] = np.max((wx * pnx + wy * pny) / poff)
        ip = np.searchsorted(pang, rq) % len(pang)
        nux = c * qnx - s * qny
        nuy = s * qnx + c * qny
        sqp[k] = np.max((pvx[ip] * nux + pvy[ip] * nuy) / qoff)
    return spq, sqp


def gauge_many(G, pts):
    pa, nx, ny, off = G
    pts = np.asarray(pts, dtype=float)
    a = np.arctan2(pts[:, 1], pts[:, 0])
    slot = np.searchsorted(pa, a, side="right") - 1
    slot[slot < 0] = len(pa) - 1
    out = (nx[slot] * pts[:, 0] + ny[slot] * pts[:, 1]) / off[slot]
    out[(pts[:, 0] == 0.0) & (pts[:, 1] == 0.0)] = 0.0
    return out


def disc_ratio(L, ox, oy, ix, iy, a, b, d):
    """Radius of S P about S o over inradius of S P about S i, S = [[a, b], [b, d]]."""
    vx, vy, nx, ny, _, off = L
    px, py = vx - ox, vy - oy
    ux, uy = a * px + b * py, b * px + d * py
    mx, my = d * nx - b * ny, -b * nx + a * ny
    rin = ((off - nx * ix - ny * iy) / np.sqrt(mx * mx + my * my)).min()
    if rin <= 1e-9:
        return np.inf
    return float(np.sqrt((ux * ux + uy * uy).max()) / rin)


def nesting_ratio(P, Q, a, b, c, d, tx, ty, ox, oy):
    """Nesting ratio of P - o and A Q + t - o by direct vertex-edge scans."""
    pvx, pvy, pnx, pny, _, poff = P
    qvx, qvy, qnx, qny, _, qoff = Q
    det = a * d - b * c
    hp = poff - pnx * ox - pny * oy
    qx = a * qvx + b * qvy + tx - ox
    qy = c * qvx + d * qvy + ty - oy
    mx = (d * qnx - c * qny) / det
    my = (-b * qnx + a * qny) / det
    hq = qoff + mx * (tx - ox) + my * (ty - oy)
    if hp.min() <= 1e-9 or (hq <= 1e-9 * np.sqrt(mx * mx + my * my)).any():
        return np.inf
    s1 = ((np.outer(qx, pnx) + np.outer(qy, pny)) / hp).max()
    s2 = ((np.outer(pvx - ox, mx) + np.outer(pvy - oy, my)) / hq).max()
    return float(s1 * s2)
