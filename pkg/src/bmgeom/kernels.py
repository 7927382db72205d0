"""Backend selection and array layouts for the polygon kernels.

The compiled extension ``_ckernels`` is used when importable; setting
``BMGEOM_PURE_PYTHON=1`` forces the numpy fallback. Both backends take the
same tuples built by :func:`support_layout` and :func:`gauge_layout`.
"""
import os

import numpy as np

from . import _pykernels

TWO_PI = 2.0 * np.pi

_c = None
if os.environ.get("BMGEOM_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as _c
    except ImportError:  # extension not built
        _c = None

BACKEND = "cython" if _c is not None else "python"
_impl = _c if _c is not None else _pykernels


def backend_module(name):
    """Return the kernel module for ``name`` ("cython" or "python")."""
    if name == "python":
        return _pykernels
    if name == "cython":
        if _c is None:
            raise ImportError("compiled kernels are not available")
        return _c
    raise ValueError(f"unknown backend {name!r}")


def support_layout(vertices):
    """Arrays (vx, vy, nx, ny, normal_angle, offset) for a CCW convex polygon.

    Vertices are rotated so edge 0 (v0 -> v1) has the smallest outward-normal
    angle; vertex k is then the support point for normal angles in
    (angle[k-1], angle[k]].
    """
    v = np.asarray(vertices, dtype=float)
    e = np.roll(v, -1, axis=0) - v
    nrm = np.stack((e[:, 1], -e[:, 0]), axis=1)
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    ang = np.mod(np.arctan2(nrm[:, 1], nrm[:, 0]), TWO_PI)
    s = int(np.argmin(ang))
    v = np.roll(v, -s, axis=0)
    nrm = np.roll(nrm, -s, axis=0)
    ang = np.roll(ang, -s)
    off = np.einsum("ij,ij->i", nrm, v)
    return tuple(np.ascontiguousarray(a) for a in
                 (v[:, 0], v[:, 1], nrm[:, 0], nrm[:, 1], ang, off))


def gauge_layout(vertices):
    """Arrays (polar_angle, nx, ny, offset) sorted by vertex polar angle.

    Slot k describes the edge from the k-th to the (k+1)-th vertex in polar
    order. Requires the origin strictly inside.
    """
    v = np.asarray(vertices, dtype=float)
    pa = np.arctan2(v[:, 1], v[:, 0])
    s = int(np.argmin(pa))
    v = np.roll(v, -s, axis=0)
    pa = np.roll(pa, -s)
    e = np.roll(v, -1, axis=0) - v
    nrm = np.stack((e[:, 1], -e[:, 0]), axis=1)
    nrm /= np.linalg.norm(nrm, axis=1)[:, None]
    off = np.einsum("ij,ij->i", nrm, v)
    return tuple(np.ascontiguousarray(a) for a in (pa, nrm[:, 0], nrm[:, 1], off))


def hausdorff_sweep(P, Q, thetas, impl=None):
    impl = impl or _impl
    return impl.hausdorff_sweep(P, Q, np.ascontiguousarray(thetas, dtype=float))


def ratio_sweep(P, Q, thetas, impl=None):
    impl = impl or _impl
    return impl.ratio_sweep(P, Q, np.ascontiguousarray(thetas, dtype=float))


def gauge_many(G, pts, impl=None):
    impl = impl or _impl
    return impl.gauge_many(G, np.ascontiguousarray(pts, dtype=float))


def disc_ratio(L, o, i, S, impl=None):
    """Outer radius about o over inner radius about i of S P (S unimodular SPD)."""
    impl = impl or _impl
    return impl.disc_ratio(L, float(o[0]), float(o[1]), float(i[0]), float(i[1]),
                           float(S[0, 0]), float(S[0, 1]), float(S[1, 1]))


def nesting_ratio(P, Q, A, t, o, impl=None):
    """Nesting ratio of P - o and A Q + t - o (layouts from :func:`support_layout`)."""
    impl = impl or _impl
    return impl.nesting_ratio(P, Q, float(A[0, 0]), float(A[0, 1]), float(A[1, 0]),
                              float(A[1, 1]), float(t[0]), float(t[1]),
                              float(o[0]), float(o[1]))
