import math

import numpy as np
import pytest

from bmgeom import convex2d as c2
from bmgeom import metrics as m
from bmgeom import sections3d as s3
from bmgeom import spherefield as sf
from bmgeom.spherefield import ExperimentRow, SphereMesh


@pytest.fixture(scope="module")
def mesh1():
    return sf.icosphere(1)


@pytest.fixture(scope="module")
def ball_field(mesh1):
    return sf.section_field(s3.ball(3), mesh1)


@pytest.fixture(scope="module")
def ellipsoid_field(mesh1):
    return sf.section_field(s3.ellipsoid((1, 1, 1.1), 3), mesh1)


def mesh_of(directions):
    v = np.array([d / np.linalg.norm(d) for d in directions], dtype=float)
    return SphereMesh(v, np.zeros((0, 3), dtype=int), tuple(s3.section_frame(x) for x in v))


def vertex_rotation(mesh, k=0, turns=1):
    """Rotation by 2 pi turns / 5 about vertex k of the icosphere."""
    ax = mesh.vertices[k]
    a = 2 * math.pi * turns / 5
    K = np.array([[0, -ax[2], ax[1]], [ax[2], 0, -ax[0]], [-ax[1], ax[0], 0]])
    return np.eye(3) + math.sin(a) * K + (1 - math.cos(a)) * K @ K


# meshes

@pytest.mark.parametrize("k", range(4))
def test_icosphere_counts(k):
    mesh = sf.icosphere(k)
    assert len(mesh.vertices) == 10 * 4**k + 2
    assert len(mesh.faces) == 20 * 4**k
    # closed triangulation: V - E + F = 2
    assert len(mesh.vertices) - len(mesh.edges) + len(mesh.faces) == 2


def test_icosphere_frames(mesh1):
    assert np.abs(np.linalg.norm(mesh1.vertices, axis=1) - 1).max() < c2.TAU_NUM
    for x, fr in zip(mesh1.vertices, mesh1.frames):
        M = np.stack((fr.e_u, fr.e_v, x))
        assert np.allclose(M @ M.T, np.eye(3), atol=c2.TAU_NUM)


def test_icosphere_range():
    with pytest.raises(ValueError):
        sf.icosphere(7)
    with pytest.raises(ValueError):
        sf.icosphere(-1)


def test_icosphere_is_rotation_symmetric(mesh1):
    Rv = mesh1.vertices @ vertex_rotation(mesh1).T
    d = np.linalg.norm(Rv[:, None, :] - mesh1.vertices[None], axis=2).min(axis=1)
    assert d.max() < 1e-12


# fields

def test_ball_fibres_near_disc(ball_field):
    D = c2.disc(4096)
    assert max(c2.hausdorff_distance(f, D) for f in ball_field.fibers) < 2e-2


def test_ellipsoid_fibre_axis_ratios():
    t = 0.2
    fld = sf.section_field(s3.ellipsoid((1, 1, 1 + t), 3), sf.icosphere(1))
    for f in fld.fibers:
        a = c2.binet_legendre_ellipse(f).semi_axes
        assert 1 - 1e-2 <= a[1] / a[0] <= 1 + t + 1e-2


def test_cube_fibres():
    fld = sf.section_field(s3.cube(), mesh_of([(0, 0, 1), (1, 1, 1)]))
    square, hexagon = fld.fibers
    assert len(square.vertices) == 4
    assert np.allclose(np.abs(square.vertices), 1)
    assert len(hexagon.vertices) == 6
    assert np.allclose(np.linalg.norm(hexagon.vertices, axis=1), math.sqrt(2))


def test_continuity_gaps_scale_with_mesh():
    P = s3.ball_cube(0.3, 2)
    gaps, edges = [], []
    for k in (2, 3, 4):
        mesh = sf.icosphere(k)
        gaps.append(sf.continuity_gaps(sf.section_field(P, mesh)).max())
        edges.append(mesh.edge_length())
    assert gaps[0] > gaps[1] > gaps[2]
    lip = [g / e for g, e in zip(gaps, edges)]
    assert max(lip) <= 2 * min(lip)


def test_transport_maps_planes():
    rng = np.random.default_rng(0)
    for _ in range(10):
        x, y = rng.normal(size=(2, 3))
        x, y = x / np.linalg.norm(x), y / np.linalg.norm(y)
        R = sf._transport(x, y)
        assert np.allclose(R @ R.T, np.eye(3), atol=1e-12)
        assert np.allclose(R @ y, x, atol=1e-12)


# delta and eps

def test_ball_delta_small(ball_field):
    d = sf.monochromaticity_delta(ball_field, 200)
    assert d.delta <= 4e-2
    assert d.delta <= d.anchor_bound + 1e-12


def test_ellipsoid_delta_is_mesh_noise(ball_field, ellipsoid_field):
    # every central section of an ellipsoid is an ellipse, so the fibres are
    # pairwise affine images and delta is the same mesh noise as the ball
    db = sf.monochromaticity_delta(ball_field, 200).delta
    de = sf.monochromaticity_delta(ellipsoid_field, 200).delta
    assert de <= 4e-2
    assert abs(de - db) < 1e-3


def test_delta_below_anchor_bound():
    fld = sf.section_field(s3.ball_cube(0.3, 1), sf.icosphere(1))
    d = sf.monochromaticity_delta(fld, 100)
    assert 0 < d.delta <= d.anchor_bound + 1e-12
    x, y = d.worst_pair
    assert x != y


def test_lazy_refinement_matches_full():
    fld = sf.section_field(s3.ball_cube(0.3, 1), sf.icosphere(0))
    d = sf.monochromaticity_delta(fld, None, grid=512)
    prep = [m.BLBody.of(f) for f in fld.fibers]
    n = len(prep)
    full = max(m.d_bm_affine_prepared(prep[i], prep[j], 512).value
               for i in range(n) for j in range(i + 1, n))
    assert d.delta <= full - 1 + 1e-12
    assert d.refined < n * (n - 1) // 2


def test_delta_seeded_and_deterministic(mesh1):
    fld = sf.section_field(s3.ball_cube(0.2, 1), mesh1)
    a = sf.monochromaticity_delta(fld, 50, seed=7)
    b = sf.monochromaticity_delta(fld, 50, seed=7)
    assert a == b


def test_pair_sample_all_pairs():
    p = sf._pair_sample(5, None, 0)
    assert len(p) == 10
    assert (p[:, 0] < p[:, 1]).all()
    q = sf._pair_sample(5, 100, 3)
    assert (q[:, 0] != q[:, 1]).all()


def test_eps_ball_and_ellipsoid(ball_field, ellipsoid_field):
    eb = sf.ellipse_deviation_eps(ball_field)
    ee = sf.ellipse_deviation_eps(ellipsoid_field)
    assert eb <= 4e-2
    assert abs(ee - eb) < 1e-6


def test_eps_cube(mesh1):
    e = sf.ellipse_deviation_eps(sf.section_field(s3.cube(), mesh1))
    assert abs(e - (math.sqrt(2) - 1)) < 2e-2


def test_rotation_invariance_exhaustive():
    mesh = sf.icosphere(0)
    P = s3.ball_cube(0.3, 1)
    Q = s3.transform_polytope(P, vertex_rotation(mesh))
    fp, fq = sf.section_field(P, mesh), sf.section_field(Q, mesh)
    dp = sf.monochromaticity_delta(fp, None).delta
    dq = sf.monochromaticity_delta(fq, None).delta
    assert abs(dp - dq) < 1e-4
    assert abs(sf.ellipse_deviation_eps(fp) - sf.ellipse_deviation_eps(fq)) < 1e-6


def test_rotation_invariance_generic_eps():
    mesh = sf.icosphere(2)
    P = s3.ball_cube(0.3, 2)
    R = s3.section_frame(np.array([0.3, -0.5, 0.8]))
    Q = s3.transform_polytope(P, np.stack((R.e_u, R.e_v, R.theta)))
    ep = sf.ellipse_deviation_eps(sf.section_field(P, mesh))
    eq = sf.ellipse_deviation_eps(sf.section_field(Q, mesh))
    assert abs(ep - eq) <= 0.1 * ep


# scaling fits

def test_fit_exact_cube_root():
    rows = [ExperimentRow(t, t, 0.7 * t ** (1 / 3)) for t in (0.01, 0.03, 0.1)]
    r = sf.fit_scaling(rows)
    assert math.isclose(r.exponent, 1 / 3, rel_tol=1e-9)
    assert math.isclose(r.c_fit, 0.7, rel_tol=1e-12)
    assert r.c_fit_stable and r.consistent


def test_fit_unstable():
    rows = [ExperimentRow(0.1, 0.001, 0.001), ExperimentRow(0.2, 0.1, 0.3)]
    r = sf.fit_scaling(rows)
    assert not r.c_fit_stable
    assert r.consistent


def test_fit_degenerate_rows():
    r = sf.fit_scaling([ExperimentRow(0.0, 0.0, 0.0)])
    assert math.isnan(r.exponent) and math.isnan(r.c_fit)
    assert not r.c_fit_stable
    assert r.as_dict()["exponent"] is None


def test_constant_ball_family():
    res = sf.scaling_experiment("ball", [0.1, 0.2], sf.icosphere(1), pair_budget=50,
                                body_subdiv=2)
    assert len(res.rows) == 2
    for row in res.rows:
        assert row.delta < 4e-2 and row.eps < 4e-2
    assert res.rows[0].delta == res.rows[1].delta


def test_experiment_accepts_callable():
    res = sf.scaling_experiment(lambda t: s3.ball_cube(t, 1), [0.2], sf.icosphere(0),
                                pair_budget=10)
    assert res.rows[0].t == 0.2


def test_no_counterexample_on_corpus():
    # fit the constant on the ball-cube sweep, then no other field may need
    # more than twice that constant
    sweep = sf.scaling_experiment("ball-cube", [0.1, 0.2, 0.4], sf.icosphere(1),
                                  pair_budget=100, body_subdiv=1)
    c = sweep.c_fit
    # the level-1 mesh only sees parallelogram sections of the cube, so the
    # polytopes use the level-2 mesh which also hits hexagonal ones
    mesh = sf.icosphere(2)
    for P in (s3.cube(), s3.octahedron()):
        fld = sf.section_field(P, mesh)
        d = sf.monochromaticity_delta(fld, 100).delta
        e = sf.ellipse_deviation_eps(fld)
        assert d > 0.1
        assert e <= 2 * c * d ** (1 / 3)


def test_cube_coarse_mesh_sees_one_class():
    fld = sf.section_field(s3.cube(), sf.icosphere(1))
    assert sf.monochromaticity_delta(fld, 100).delta < 1e-9
