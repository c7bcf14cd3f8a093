import numpy as np
import pytest

from limbplan.geometry import GraspSite, Pose, default_robot
from limbplan.wrench import (
    GeneratorSet,
    TaskPolytope,
    achievable,
    generator_set,
    inscribed_margin,
    sampled_ellipsoid_margin,
    scale_torque_weights,
    support_points,
)
from oracles import convex_polygon_signed_distance, zonogon_vertices


def _force_gen(dx, dy, u, m_max=0.0, dz=0.0):
    d = np.array([dx, dy, dz], dtype=float)
    d /= np.linalg.norm(d)
    return (np.concatenate([d, np.zeros(3)]), u)


def _w(fx=0.0, fy=0.0, fz=0.0, tx=0.0, ty=0.0, tz=0.0):
    return np.array([fx, fy, fz, tx, ty, tz], dtype=float)


def test_opposed_generators_interval():
    gen = GeneratorSet(generators=(_force_gen(1, 0, 1.0), _force_gen(-1, 0, 1.0)),
                       m_max=0.0)
    assert achievable(gen, _w(fx=0.5))
    assert not achievable(gen, _w(fx=1.5))
    assert achievable(gen, _w(fx=-0.75))


def test_orthogonal_generators():
    gen = GeneratorSet(generators=(_force_gen(1, 0, 1.0), _force_gen(0, 1, 1.0)),
                       m_max=0.0)
    assert achievable(gen, _w(fx=0.5, fy=0.5))
    assert not achievable(gen, _w(fx=-0.1, fy=0.5))


def test_empty_generator_set_is_pure_torque_box():
    gen = GeneratorSet(generators=(), m_max=1.0, attached_count=2)
    assert achievable(gen, _w())
    assert achievable(gen, _w(tx=1.5, ty=-2.0, tz=2.0))
    assert not achievable(gen, _w(tx=2.5))
    assert not achievable(gen, _w(fx=1e-3))


def test_torque_box_scales_with_attached_count():
    gens = (_force_gen(1, 0, 1.0), _force_gen(-1, 0, 1.0), _force_gen(0, 1, 1.0))
    gen = GeneratorSet(generators=gens, m_max=0.5)
    assert gen.torque_halfwidth == pytest.approx(1.5)
    assert achievable(gen, _w(tz=1.4))
    assert not achievable(gen, _w(tz=1.6))


def _square_polytope():
    basis = np.array([
        [1, 0, 0, 0, 0, 0],
        [-1, 0, 0, 0, 0, 0],
        [0, 1, 0, 0, 0, 0],
        [0, -1, 0, 0, 0, 0],
    ], dtype=float)
    return TaskPolytope(basis=basis, weights=np.ones(4))


def test_inscribed_margin_unit_square():
    gen = GeneratorSet(generators=(_force_gen(1, 0, 1.0), _force_gen(0, 1, 1.0)),
                       m_max=0.0)
    poly = _square_polytope()
    assert inscribed_margin(gen, _w(fx=0.5, fy=0.5), poly) == pytest.approx(0.5, abs=1e-8)
    assert inscribed_margin(gen, _w(fx=1.0, fy=1.0), poly) == pytest.approx(0.0, abs=1e-8)
    assert inscribed_margin(gen, _w(fx=1.2, fy=0.5), poly) == -np.inf


def test_inscribed_margin_weighted_directions():
    gen = GeneratorSet(generators=(_force_gen(1, 0, 1.0), _force_gen(0, 1, 1.0)),
                       m_max=0.0)
    basis = _square_polytope().basis
    # Twice the weight along x halves the achievable scaling in x.
    poly = TaskPolytope(basis=basis, weights=np.array([2.0, 2.0, 1.0, 1.0]))
    z = inscribed_margin(gen, _w(fx=0.5, fy=0.5), poly)
    assert z == pytest.approx(0.25, abs=1e-8)


def test_margin_scale_covariance():
    rng = np.random.default_rng(3)
    for _ in range(20):
        n = int(rng.integers(2, 5))
        gens = tuple(_force_gen(*rng.normal(size=2), u=rng.uniform(0.2, 2.0))
                     for _ in range(n))
        m_max = float(rng.uniform(0.0, 0.5))
        gen = GeneratorSet(generators=gens, m_max=m_max)
        poly = _square_polytope()
        w = sum((u * g for g, u in gen.generators), np.zeros(6)) * rng.uniform(0.2, 0.8)
        z1 = inscribed_margin(gen, w, poly)
        c = float(rng.uniform(0.5, 3.0))
        gen_c = GeneratorSet(generators=tuple((g, c * u) for g, u in gens),
                             m_max=c * m_max)
        z2 = inscribed_margin(gen_c, c * w, poly)
        if np.isfinite(z1):
            assert z2 == pytest.approx(c * z1, rel=1e-7, abs=1e-9)


def test_achievable_monotone_in_tension_bounds():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n = int(rng.integers(1, 5))
        gens = tuple(_force_gen(*rng.normal(size=2), u=rng.uniform(0.2, 2.0))
                     for _ in range(n))
        gen = GeneratorSet(generators=gens, m_max=0.0)
        alpha = rng.uniform(0, 1, n)
        w = sum((a * u * g for a, (g, u) in zip(alpha, gen.generators)), np.zeros(6))
        assert achievable(gen, w)
        bigger = GeneratorSet(
            generators=tuple((g, u * rng.uniform(1.0, 2.0)) for g, u in gens),
            m_max=0.0)
        assert achievable(bigger, w)


def test_scale_torque_weights_identity_and_formula():
    basis = []
    weights = []
    for k in (0, 3):  # one force axis, one torque axis
        e = np.zeros(6)
        e[k] = 1.0
        basis.extend([e, -e])
    weights = np.array([10 / np.sqrt(2), 10 / np.sqrt(2), 1 / np.sqrt(2), 1 / np.sqrt(2)])
    poly = TaskPolytope(basis=np.array(basis), weights=weights)

    same = scale_torque_weights(poly, 0.0)
    assert np.array_equal(same.weights, poly.weights)

    scaled = scale_torque_weights(poly, 0.5)  # lambda = 1 + 10*0.5/1 = 6
    assert scaled.weights[:2] == pytest.approx(poly.weights[:2])
    assert scaled.weights[2:] == pytest.approx(6.0 * poly.weights[2:])

    equal = TaskPolytope(basis=np.array(basis), weights=np.ones(4))
    lam2 = scale_torque_weights(equal, 1.0)  # |sF| = |stau| -> lambda = 2
    assert lam2.weights[2:] == pytest.approx(2.0 * equal.weights[2:])


def test_scale_torque_weights_pure_torque_task():
    e = np.zeros(6)
    e[4] = 1.0
    poly = TaskPolytope(basis=np.stack([e, -e]), weights=np.array([1.0, 1.0]))
    out = scale_torque_weights(poly, 0.7)  # no force weights: lambda = 1
    assert np.array_equal(out.weights, poly.weights)


def test_scale_torque_weights_requires_torque_directions():
    e = np.zeros(6)
    e[0] = 1.0
    poly = TaskPolytope(basis=np.stack([e, -e]), weights=np.array([1.0, 1.0]))
    with pytest.raises(ValueError):
        scale_torque_weights(poly, 0.1)


def test_axis_aligned_polytope_layout():
    poly = TaskPolytope.axis_aligned([2.0, 2.0, 6.0], [0.5, 0.5, 0.5])
    assert poly.p == 12
    assert poly.weights[0] == poly.weights[1] == 2.0
    assert poly.weights[4] == 6.0
    tmask = poly.torque_mask()
    assert tmask.sum() == 6 and not tmask[:6].any()


def test_support_points_single_generator():
    g, u = _force_gen(1, 0, 2.0)
    gen = GeneratorSet(generators=((g, u),), m_max=0.0)
    d = np.concatenate([g[:3], np.zeros(3)])
    along, against = support_points(gen, [d, -d])
    assert along == pytest.approx(u * g)
    assert against == pytest.approx(np.zeros(6))


def test_support_points_dominate_samples():
    rng = np.random.default_rng(8)
    gens = tuple(_force_gen(*rng.normal(size=2), u=rng.uniform(0.5, 2.0), dz=rng.normal())
                 for _ in range(4))
    gen = GeneratorSet(generators=gens, m_max=0.3)
    dirs = rng.normal(size=(10, 6))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    sups = support_points(gen, list(dirs))
    box = gen.torque_halfwidth
    for _ in range(200):
        alpha = rng.uniform(0, 1, 4)
        tau = rng.uniform(-box, box, 3)
        w = sum((a * u * g for a, (g, u) in zip(alpha, gen.generators)), np.zeros(6))
        w[3:] += tau
        for d, s in zip(dirs, sups):
            assert d @ w <= d @ s + 1e-9


def test_generator_set_from_robot_geometry():
    model = default_robot()
    pose = Pose.identity()
    site = GraspSite(id=0, position=np.array([3.0, 0.0, 0.0]),
                     quality=0.5, pull_mean=20.0, pull_std=3.0)
    gen = generator_set(pose, model, [(0, site)])
    assert gen.n == 1
    g, u = gen.generators[0]
    assert u == pytest.approx(model.t_max * 0.5)
    assert np.linalg.norm(g[:3]) == pytest.approx(1.0)
    assert gen.m_max == model.m_max


def test_zonogon_agreement_battery():
    rng = np.random.default_rng(20260313)
    checked = 0
    for case in range(100):
        n = int(rng.integers(1, 7))
        angles = rng.uniform(0, 2 * np.pi, n)
        u = rng.uniform(0.1, 2.0, n)
        gens = tuple(_force_gen(np.cos(a), np.sin(a), uu) for a, uu in zip(angles, u))
        gen = GeneratorSet(generators=gens, m_max=0.0)
        segs = np.array([uu * np.array([np.cos(a), np.sin(a)]) for a, uu in zip(angles, u)])
        verts = zonogon_vertices(segs)
        span = max(1.0, float(np.abs(verts).max()))
        pts = [segs.sum(axis=0) * f for f in (0.25, 0.5, 0.75)]
        pts.extend(rng.uniform(-span, span, size=(30, 2)))
        pts.extend(verts[rng.integers(0, len(verts))] + rng.normal(0, 1e-3, 2)
                   for _ in range(10))
        for pt in pts:
            sd = convex_polygon_signed_distance(verts, np.asarray(pt))
            if abs(sd) <= 1e-6:
                continue  # boundary band: either answer is acceptable
            inside_lp = achievable(gen, _w(fx=pt[0], fy=pt[1]))
            assert inside_lp == (sd < 0), f"case {case}, pt {pt}, sd {sd}"
            checked += 1
    assert checked > 2000


def test_sampled_ellipsoid_margin_full_dimensional_set():
    # Force cube [-1,1]^3 plus torque box of half-width 3: the directional
    # reach from the center is min(1/|d_F|_inf, 3/|d_tau|_inf) >= 1 for any
    # unit direction, so the sampled minimum sits a little above 1.
    gens = [_force_gen(1, 0, 1.0), _force_gen(-1, 0, 1.0),
            _force_gen(0, 1, 1.0), _force_gen(0, -1, 1.0),
            _force_gen(0, 0, 1.0, dz=1.0), _force_gen(0, 0, 1.0, dz=-1.0)]
    gen = GeneratorSet(generators=tuple(gens), m_max=0.5)
    rho = sampled_ellipsoid_margin(gen, _w(), np.ones(6), n_samples=128, seed=1)
    assert 1.0 - 1e-9 <= rho <= 2.5


def test_validation_errors():
    with pytest.raises(ValueError):
        GeneratorSet(generators=((np.ones(6), 1.0),), m_max=0.0)  # non-unit force
    with pytest.raises(ValueError):
        GeneratorSet(generators=(_force_gen(1, 0, -1.0),), m_max=0.0)
    with pytest.raises(ValueError):
        TaskPolytope(basis=np.ones((1, 6)), weights=np.array([1.0]))
    with pytest.raises(ValueError):
        TaskPolytope(basis=np.eye(6)[:1], weights=np.array([-1.0]))
    gen = GeneratorSet(generators=(_force_gen(1, 0, 1.0),), m_max=0.0)
    with pytest.raises(ValueError):
        support_points(gen, [np.ones(6)])
