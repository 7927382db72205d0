"""Approximate isometries of a planar body, their clusters and the stable window.

After Binet-Legendre normalisation the ellipse-preserving linear maps are
O(2), two circles: rotations R(theta) and reflections R(theta) F with
F = diag(1, -1). A profile samples the deviation d(K, gK) on a uniform grid
of each circle; sublevel sets of the profile are unions of grid arcs.
"""
from dataclasses import dataclass, field
import math

import numpy as np

from . import convex2d as c2
from . import kernels
from .convex2d import TAU_NUM
from .errors import NoStableWindow, PreconditionViolated, SeparationViolated
from .metrics import A2, B2, FLIP, d_bm_disc

TWO_PI = 2.0 * math.pi
COMPONENTS = ("rotation", "reflection")
_REL = 1e-12


@dataclass(frozen=True, eq=False)
class IsometryProfile:
    """Deviations d(K', g K') of the normalised body over both O(2) circles.

    ``dev_rot[k]`` is for R(2 pi k / grid), ``dev_refl[k]`` for
    R(2 pi k / grid) F.
    """

    grid_size: int
    dev_rot: np.ndarray
    dev_refl: np.ndarray

    @property
    def thetas(self):
        return TWO_PI * np.arange(self.grid_size) / self.grid_size

    def deviations(self, component):
        return self.dev_rot if component == "rotation" else self.dev_refl

    def min_positive(self, floor=TAU_NUM):
        """Smallest deviation above ``floor`` over both components."""
        d = np.concatenate((self.dev_rot, self.dev_refl))
        d = d[d > floor]
        return float(d.min()) if d.size else math.inf


@dataclass(frozen=True)
class Arc:
    """Closed arc from ``start`` of angular ``length``; length 2 pi is the circle."""

    start: float
    length: float

    @property
    def end(self):
        return self.start + self.length

    @property
    def is_full(self):
        return self.length >= TWO_PI


@dataclass(frozen=True)
class ArcSet:
    grid_size: int
    arcs: dict = field(default_factory=dict)

    def component(self, name):
        return self.arcs.get(name, ())


@dataclass(frozen=True)
class Cluster:
    component: str
    start: float
    length: float

    @property
    def representative(self):
        return math.fmod(self.start + 0.5 * self.length, TWO_PI)


@dataclass(frozen=True)
class ClusterSet:
    clusters: tuple
    beta1: float
    beta0: float

    def count(self, component=None):
        return sum(1 for c in self.clusters if component is None or c.component == component)


@dataclass(frozen=True)
class StabilityParams:
    """The parameter cascade of the stable-window argument for a given eps."""

    eps: float
    alpha0: float
    beta0_raw: float
    B0: int
    beta0: float
    alpha1: float
    alpha2: float
    beta1: float
    delta_prime: float
    alpha3: float

    @classmethod
    def from_eps(cls, eps, delta_prime):
        if not eps > 0:
            raise ValueError("eps must be positive")
        alpha0 = 0.5 * A2 * eps
        beta0_raw = A2 / (2.0 * B2) * eps
        # smallest B0 >= 3 whose 2 pi / B0 fits under beta0_raw, i.e. the
        # largest admissible beta0
        B0 = max(3, math.ceil(TWO_PI / beta0_raw * (1.0 - _REL)))
        beta0 = TWO_PI / B0
        alpha1 = alpha0 / (2 * B0)
        alpha2 = alpha1 / 2.0
        return cls(eps, alpha0, beta0_raw, B0, beta0, alpha1, alpha2, beta0 / 2.0,
                   float(delta_prime), alpha2 - delta_prime)

    @classmethod
    def from_eps_delta(cls, eps, delta):
        """Parameters with delta' = b2' delta, b2' = 1 + 10 b2 / a2."""
        return cls.from_eps(eps, (1.0 + 10.0 * B2 / A2) * delta)

    @property
    def admissible(self):
        return self.delta_prime > 0 and self.alpha3 > 8 * self.B0 * self.delta_prime * (1.0 + _REL)

    @classmethod
    def boundary_delta_prime(cls, eps):
        """delta' with alpha3 = 8 B0 delta' exactly (not admissible)."""
        p = cls.from_eps(eps, 0.0)
        return p.alpha2 / (8 * p.B0 + 1)


def iso_profile(K, grid=4096):
    """Deviation profile of K over O(2) after Binet-Legendre normalisation."""
    if grid < 8:
        raise ValueError("grid must be at least 8")
    Kn, _ = c2.bl_normalize(K)
    A = Kn.support
    th = TWO_PI * np.arange(grid) / grid
    rot = kernels.hausdorff_sweep(A, A, th)
    Fv = (Kn.vertices @ FLIP.T)[::-1]
    refl = kernels.hausdorff_sweep(A, kernels.support_layout(Fv), th)
    return IsometryProfile(grid, rot, refl)


def _runs(mask):
    """Circular runs of True as (first index, count)."""
    n = len(mask)
    if mask.all():
        return [(0, n)]
    if not mask.any():
        return []
    # start scanning just after a False so no run is split by the seam
    s = int(np.flatnonzero(~mask)[0])
    out, i = [], 0
    while i < n:
        k = (s + i) % n
        if mask[k]:
            j = i
            while j < n and mask[(s + j) % n]:
                j += 1
            out.append((k, j - i))
            i = j
        else:
            i += 1
    return sorted(out)


def sublevel_arcs(prof, lam):
    """Grid arcs where the deviation is below ``lam`` (as <= lam - tau_num)."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    h = TWO_PI / prof.grid_size
    arcs = {}
    for comp in COMPONENTS:
        mask = prof.deviations(comp) <= lam - TAU_NUM
        runs = _runs(mask)
        if runs == [(0, prof.grid_size)]:
            arcs[comp] = (Arc(0.0, TWO_PI),)
        else:
            arcs[comp] = tuple(Arc(i * h, (c - 1) * h) for i, c in runs)
    return ArcSet(prof.grid_size, arcs)


def _gaps(arcs):
    """Open gaps between consecutive arcs, circularly; arcs sorted by start."""
    out = []
    for i, a in enumerate(arcs):
        b = arcs[(i + 1) % len(arcs)]
        nxt = b.start + (TWO_PI if i + 1 == len(arcs) else 0.0)
        out.append(nxt - a.end)
    return out


def is_beta_net(arcs, beta, component="rotation"):
    """True iff every closed beta-interval of the circle meets the arcs.

    A closed interval of length beta misses the set exactly when it fits in
    an open gap longer than beta, so the test is max gap <= beta.
    """
    if not 0 < beta < TWO_PI:
        raise ValueError("beta must lie in (0, 2 pi)")
    a = sorted(arcs.component(component), key=lambda x: x.start)
    if not a:
        return False
    if any(x.is_full for x in a):
        return True
    return max(_gaps(a)) <= beta * (1.0 + _REL)


def _component_clusters(arcs, comp, beta1, beta0):
    a = sorted(arcs, key=lambda x: x.start)
    if not a:
        return []
    for x in a:
        if x.length > beta1 * (1.0 + _REL):
            raise SeparationViolated(
                f"{comp} arc of length {x.length:.6g} exceeds cluster diameter {beta1:.6g}",
                pair=((x.start, x.length), (x.start, x.length)), distance=0.0, component=comp)
    groups = [[a[0].start, a[0].end]]
    for x in a[1:]:
        if x.end - groups[-1][0] <= beta1 * (1.0 + _REL):
            groups[-1][1] = max(groups[-1][1], x.end)
        else:
            groups.append([x.start, x.end])
    if len(groups) > 1:
        first, last = groups[0], groups[-1]
        if first[1] + TWO_PI - last[0] <= beta1 * (1.0 + _REL):
            groups[0] = [last[0], first[1] + TWO_PI]
            groups.pop()
    clusters = [Cluster(comp, math.fmod(s, TWO_PI), e - s) for s, e in groups]
    clusters.sort(key=lambda c: c.start)
    if len(clusters) > 1:
        for i, c in enumerate(clusters):
            d = clusters[(i + 1) % len(clusters)]
            gap = d.start + (TWO_PI if i + 1 == len(clusters) else 0.0) - (c.start + c.length)
            if gap < beta0 * (1.0 - _REL):
                raise SeparationViolated(
                    f"{comp} clusters at {c.representative:.6g} and {d.representative:.6g} "
                    f"are {gap:.6g} apart, less than {beta0:.6g}",
                    pair=((c.start, c.length), (d.start, d.length)), distance=gap,
                    component=comp)
    return clusters


def extract_clusters(arcs, beta1, beta0):
    """Group arcs into clusters of diameter <= beta1 and check beta0 separation.

    Arcs are scanned by ascending start angle and appended to the current
    cluster while its diameter stays within beta1; a final cluster is merged
    with the first if they fit together across angle 0.
    """
    if not math.isclose(beta1, beta0 / 2.0, rel_tol=1e-9):
        raise ValueError("beta1 must equal beta0 / 2")
    out = []
    for comp in COMPONENTS:
        out.extend(_component_clusters(arcs.component(comp), comp, beta1, beta0))
    return ClusterSet(tuple(out), beta1, beta0)


def cluster_count_curve(prof, beta1, alphas, component=None):
    """Cluster count at each alpha; -1 where separation fails.

    ``component`` restricts the count to one circle; None counts both.
    """
    alphas = list(alphas)
    if any(b < a for a, b in zip(alphas, alphas[1:])):
        raise ValueError("alphas must be sorted ascending")
    out = []
    for a in alphas:
        try:
            cs = extract_clusters(sublevel_arcs(prof, a), beta1, 2.0 * beta1)
        except SeparationViolated:
            out.append(-1)
            continue
        out.append(cs.count(component))
    return out


@dataclass(frozen=True)
class CertificateReport:
    fires: bool
    alpha: float
    beta: float
    verified_bm: float
    sound: bool
    grid_size: int


def near_euclidean_certificate(K, eps, grid=4096, slack=5e-3, profile=None):
    """Dense approximate rotations imply closeness to the disc; check both.

    ``fires`` says the alpha-approximate rotations form a beta-net.
    ``verified_bm`` is an independent Banach-Mazur estimate against the
    exact disc; ``sound`` is False only if the certificate fired while
    verified_bm >= 1 + eps + slack.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    alpha = 0.5 * A2 * eps
    beta = A2 / (2.0 * B2) * eps
    prof = profile if profile is not None else iso_profile(K, grid)
    fires = is_beta_net(sublevel_arcs(prof, alpha), beta, "rotation")
    bm = d_bm_disc(K).value
    return CertificateReport(bool(fires), alpha, beta, bm,
                             bool(not fires or bm < 1.0 + eps + slack), prof.grid_size)


def step_jumps(curve):
    """Alphas at which a step function given as sorted (alpha, count) changes."""
    curve = sorted(curve)
    return [a for (a, c), (_, c0) in zip(curve[1:], curve[:-1]) if c != c0]


def stable_window_search(curve, params):
    """Smallest gamma0 in [0, alpha3 - 3 delta'] with the count constant on
    [gamma0, gamma0 + 3 delta'].

    ``curve`` is step data: sorted (alpha, count) pairs, the count holding
    from each alpha up to the next. Only 0 and jump locations can be the
    smallest window start.
    """
    if not params.admissible:
        raise PreconditionViolated(
            f"alpha3 = {params.alpha3:.6g} does not exceed 8 B0 delta' = "
            f"{8 * params.B0 * params.delta_prime:.6g}")
    w = 3.0 * params.delta_prime
    hi = params.alpha3 - w
    jumps = [a for a in step_jumps(curve) if a > 0]
    for g in [0.0] + jumps:
        if g > hi:
            break
        if not any(g < j <= g + w for j in jumps):
            return g
    raise NoStableWindow(f"no jump-free window of width {w:.6g} below {params.alpha3:.6g}")
