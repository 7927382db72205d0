import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmgeom import convex2d as c2
from bmgeom import isometry as iso
from bmgeom.errors import NoStableWindow, PreconditionViolated, SeparationViolated
from bmgeom.isometry import Arc, ArcSet, StabilityParams

from conftest import polygons, random_polygon, square_polygon

TWO_PI = 2 * math.pi


def arcset(rot=(), refl=(), grid=1024):
    return ArcSet(grid, {"rotation": tuple(rot), "reflection": tuple(refl)})


def perturbed_disc(amp, m=1024, seed=0):
    rng = np.random.default_rng(seed)
    t = TWO_PI * np.arange(m) / m
    r = 1 + amp * rng.uniform(-1, 1, m)
    return c2.make_polygon(np.stack((r * np.cos(t), r * np.sin(t)), 1))


@pytest.fixture(scope="module")
def square_profile():
    return iso.iso_profile(square_polygon(), 4096)


# profiles

def test_disc_profile_is_flat():
    p = iso.iso_profile(c2.disc(1024), 2048)
    assert p.dev_rot.max() <= 2e-3
    assert p.dev_refl.max() <= 2e-3


def test_square_profile_zeros(square_profile):
    p = square_profile
    n = p.grid_size
    for k in range(4):
        assert p.dev_rot[k * n // 4] <= c2.TAU_NUM
    mask = np.ones(n, bool)
    mask[:: n // 4] = False
    assert p.dev_rot[mask].min() > 0


def test_square_profile_quarter_turn_invariant(square_profile):
    p = square_profile
    q = p.grid_size // 4
    assert np.abs(np.roll(p.dev_rot, q) - p.dev_rot).max() <= c2.TAU_NUM
    assert np.abs(np.roll(p.dev_refl, q) - p.dev_refl).max() <= c2.TAU_NUM


def test_profile_rejects_small_grid(square):
    with pytest.raises(ValueError):
        iso.iso_profile(square, 4)


@settings(max_examples=25, deadline=None)
@given(polygons(), st.data())
def test_composition_law(K, data):
    p = iso.iso_profile(K, 256)
    n = p.grid_size
    i = data.draw(st.integers(0, n - 1))
    j = data.draw(st.integers(0, n - 1))
    r, f = p.dev_rot, p.dev_refl
    slack = 1e-9
    # R(a) R(b) = R(a+b); R(a) F R(b) = R(a-b) F; R(a) R(b) F = R(a+b) F
    assert r[(i + j) % n] <= r[i] + r[j] + slack
    assert f[(i - j) % n] <= f[i] + r[j] + slack
    assert f[(i + j) % n] <= r[i] + f[j] + slack
    # R(a) F R(b) F = R(a-b)
    assert r[(i - j) % n] <= f[i] + f[j] + slack


@settings(max_examples=25, deadline=None)
@given(polygons())
def test_inverse_law(K):
    p = iso.iso_profile(K, 256)
    assert p.dev_rot[0] <= c2.TAU_NUM
    assert np.allclose(p.dev_rot, np.roll(p.dev_rot[::-1], 1), atol=1e-9)


# arcs

def test_square_small_lambda_four_arcs(square_profile):
    arcs = iso.sublevel_arcs(square_profile, 0.01).component("rotation")
    assert len(arcs) == 4
    centers = sorted(math.fmod(a.start + a.length / 2 + 0.1, TWO_PI) - 0.1 for a in arcs)
    assert np.allclose(centers, [0, math.pi / 2, math.pi, 3 * math.pi / 2], atol=1e-2)


def test_large_lambda_full_circle(square_profile):
    lam = 1 + max(square_profile.dev_rot.max(), square_profile.dev_refl.max())
    a = iso.sublevel_arcs(square_profile, lam)
    for comp in iso.COMPONENTS:
        (arc,) = a.component(comp)
        assert arc.is_full


def test_lambda_must_be_positive(square_profile):
    with pytest.raises(ValueError):
        iso.sublevel_arcs(square_profile, 0.0)


def covered(arcs, theta):
    for a in arcs:
        if a.is_full or (theta - a.start) % TWO_PI <= a.length + 1e-12:
            return True
    return False


@settings(max_examples=20, deadline=None)
@given(polygons(), st.floats(0.001, 0.5), st.floats(0.001, 0.5))
def test_sublevel_monotone(K, l1, l2):
    l1, l2 = sorted((l1, l2))
    p = iso.iso_profile(K, 256)
    a1, a2 = iso.sublevel_arcs(p, l1), iso.sublevel_arcs(p, l2)
    for comp in iso.COMPONENTS:
        for a in a1.component(comp):
            for t in np.linspace(a.start, a.end, 5):
                assert covered(a2.component(comp), t)


def test_arcs_disjoint_and_sorted(square_profile):
    for lam in (0.01, 0.05, 0.2):
        arcs = iso.sublevel_arcs(square_profile, lam).component("rotation")
        for a, b in zip(arcs, arcs[1:]):
            assert a.end < b.start


# beta nets

def test_full_circle_is_net():
    assert iso.is_beta_net(arcset([Arc(0.0, TWO_PI)]), 0.01)


def test_four_points_net():
    pts = arcset([Arc(k * math.pi / 2, 0.0) for k in range(4)])
    assert iso.is_beta_net(pts, math.pi / 2)
    assert not iso.is_beta_net(pts, math.pi / 3)


def test_empty_is_not_net():
    assert not iso.is_beta_net(arcset(), 1.0)


def test_beta_net_checks_beta_range():
    with pytest.raises(ValueError):
        iso.is_beta_net(arcset(), 0.0)
    with pytest.raises(ValueError):
        iso.is_beta_net(arcset(), TWO_PI)


def test_beta_net_uses_component():
    a = arcset(rot=[Arc(0.0, TWO_PI)])
    assert iso.is_beta_net(a, 0.5, "rotation")
    assert not iso.is_beta_net(a, 0.5, "reflection")


# clusters

def test_square_clusters(square_profile):
    cs = iso.extract_clusters(iso.sublevel_arcs(square_profile, 0.01), math.pi / 8, math.pi / 4)
    assert cs.count("rotation") == 4
    assert cs.count("reflection") == 4
    reps = sorted(c.representative for c in cs.clusters if c.component == "rotation")
    gaps = np.diff(reps + [reps[0] + TWO_PI])
    assert np.allclose(gaps, math.pi / 2, atol=1e-2)


@pytest.mark.parametrize("m", range(3, 13))
def test_regular_polygon_cluster_count(m):
    p = iso.iso_profile(c2.regular_polygon(m), m * 256)
    cs = iso.extract_clusters(iso.sublevel_arcs(p, 0.5 * p.min_positive()),
                              math.pi / (2 * m), math.pi / m)
    assert cs.count("rotation") == m


def test_full_circle_cluster():
    a = arcset([Arc(0.0, TWO_PI)])
    with pytest.raises(SeparationViolated):
        iso.extract_clusters(a, 1.0, 2.0)
    cs = iso.extract_clusters(a, TWO_PI, 2 * TWO_PI)
    assert cs.count() == 1


def test_close_arcs_violate_separation():
    b1, b0 = 0.1, 0.2
    d = (b1 + b0) / 2
    with pytest.raises(SeparationViolated) as e:
        iso.extract_clusters(arcset([Arc(1.0, 0.0), Arc(1.0 + d, 0.0)]), b1, b0)
    assert math.isclose(e.value.distance, d)
    assert e.value.component == "rotation"


def test_wraparound_merge():
    cs = iso.extract_clusters(arcset([Arc(0.01, 0.0), Arc(TWO_PI - 0.01, 0.0)]), 0.1, 0.2)
    (c,) = cs.clusters
    assert math.isclose(c.length, 0.02)


def test_clusters_require_half_beta():
    with pytest.raises(ValueError):
        iso.extract_clusters(arcset(), 0.1, 0.3)


def test_square_count_curve(square_profile):
    alphas = np.linspace(0.001, 0.3, 40)
    curve = iso.cluster_count_curve(square_profile, math.pi / 8, alphas, "rotation")
    assert curve[0] == 4
    ok = [c for c in curve if c >= 0]
    assert all(a <= b for a, b in zip(ok, ok[1:]))


def test_count_curve_needs_sorted_alphas(square_profile):
    with pytest.raises(ValueError):
        iso.cluster_count_curve(square_profile, 0.1, [0.2, 0.1])


def test_disc_count_curve_sentinel():
    p = iso.iso_profile(c2.disc(1024), 1024)
    assert iso.cluster_count_curve(p, 0.1, [0.01]) == [-1]


@settings(max_examples=20, deadline=None)
@given(polygons())
def test_count_curve_monotone(K):
    p = iso.iso_profile(K, 512)
    beta1 = 0.05
    curve = iso.cluster_count_curve(p, beta1, np.geomspace(1e-4, 0.5, 25))
    ok = [c for c in curve if c >= 0]
    assert all(a <= b for a, b in zip(ok, ok[1:]))
    B0 = math.floor(TWO_PI / (2 * beta1))
    assert all(c <= 2 * B0 for c in ok)


# parameters

def test_params_cascade():
    p = StabilityParams.from_eps(0.1, 0.0)
    assert math.isclose(p.alpha0, 0.1 / 64)
    assert math.isclose(p.beta0_raw, 0.1 / 2048)
    assert p.beta0 <= p.beta0_raw
    assert TWO_PI / (p.B0 - 1) > p.beta0_raw
    assert math.isclose(p.beta1, p.beta0 / 2)
    assert math.isclose(p.alpha2, p.alpha0 / (4 * p.B0))


def test_params_reject_bad_eps():
    with pytest.raises(ValueError):
        StabilityParams.from_eps(0.0, 0.0)


def test_boundary_delta_prime_not_admissible():
    dp = StabilityParams.boundary_delta_prime(0.1)
    p = StabilityParams.from_eps(0.1, dp)
    assert math.isclose(p.alpha3, 8 * p.B0 * dp, rel_tol=1e-12)
    assert not p.admissible
    assert StabilityParams.from_eps(0.1, 0.99 * dp).admissible


# stable window

def synthetic(alpha3, dp, B0=3):
    """Parameters with a given alpha3 and delta' (cascade fields unused)."""
    return StabilityParams(0.0, 0.0, 0.0, B0, 0.0, 0.0, alpha3 + dp, 0.0, dp, alpha3)


def test_window_constant_curve():
    assert iso.stable_window_search([(0.0, 4), (0.5, 4)], synthetic(1.0, 0.01)) == 0.0


def test_window_quarter_half_jumps():
    a3 = 1.0
    curve = [(0.0, 2), (a3 / 4, 3), (a3 / 2, 4)]
    assert iso.stable_window_search(curve, synthetic(a3, a3 / 100)) == 0.0


def test_window_skips_crowded_jumps():
    curve = [(0.0, 1), (0.01, 2), (0.02, 3), (0.5, 4)]
    assert math.isclose(iso.stable_window_search(curve, synthetic(1.0, 0.01)), 0.02)


def test_window_boundary_raises():
    dp = StabilityParams.boundary_delta_prime(0.1)
    with pytest.raises(PreconditionViolated):
        iso.stable_window_search([(0.0, 1)], StabilityParams.from_eps(0.1, dp))


def test_window_none_found():
    curve = [(0.0, 0)] + [(0.01 * k, k) for k in range(1, 101)]
    with pytest.raises(NoStableWindow):
        iso.stable_window_search(curve, synthetic(1.0, 0.01))


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-4, 0.999), min_size=0, max_size=20), st.floats(1e-4, 0.04))
def test_window_property(jumps, frac):
    a3 = 1.0
    B0 = 3
    dp = frac * a3 / (8 * B0)
    jumps = sorted(set(jumps))
    curve = [(0.0, 0)] + [(a, k + 1) for k, a in enumerate(jumps)]
    params = synthetic(a3, dp, B0)
    try:
        g = iso.stable_window_search(curve, params)
    except NoStableWindow:
        # only possible when jumps crowd every window start
        assert len(jumps) * 3 * dp >= a3 - 3 * dp - 1e-12 or len(jumps) > 2 * B0
        return
    assert 0 <= g <= a3 - 3 * dp
    assert not any(g < j <= g + 3 * dp for j in jumps)


# certificate

def test_certificate_disc_fires():
    r = iso.near_euclidean_certificate(c2.disc(1024), 0.1)
    assert r.fires and r.sound
    assert abs(r.verified_bm - 1) < 2e-3


def test_certificate_square_silent():
    r = iso.near_euclidean_certificate(square_polygon(), 0.1)
    assert not r.fires
    assert math.isclose(r.alpha, 0.1 / 64)


def test_certificate_bisection():
    K = perturbed_disc(1e-4)
    prof = iso.iso_profile(K, 4096)
    lo, hi = 1e-6, 0.99
    assert iso.near_euclidean_certificate(K, hi, profile=prof).fires
    assert not iso.near_euclidean_certificate(K, lo, profile=prof).fires
    for _ in range(30):
        mid = math.sqrt(lo * hi)
        if iso.near_euclidean_certificate(K, mid, profile=prof).fires:
            hi = mid
        else:
            lo = mid
    r = iso.near_euclidean_certificate(K, hi, profile=prof)
    assert r.fires and r.sound
    assert r.verified_bm < 1 + hi


def test_certificate_eps_range(square):
    with pytest.raises(ValueError):
        iso.near_euclidean_certificate(square, 1.0)


def test_certificate_sound_on_random_corpus():
    rng = np.random.default_rng(3)
    for k in range(20):
        K = random_polygon(rng) if k % 2 else perturbed_disc(10 ** rng.uniform(-5, -2), 256, k)
        r = iso.near_euclidean_certificate(K, rng.uniform(0.01, 0.9), grid=1024)
        assert r.sound
