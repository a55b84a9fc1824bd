import math

import numpy as np
import pytest

from geoswarm.dynamics import (
    DiskSample,
    EmpiricalMeasure,
    SimConfig,
    simulate,
    simulate_product_decoupled,
    step,
    time_grid,
    velocity,
)
from geoswarm.errors import DomainViolation
from geoswarm.manifolds import CylinderBand, Euclidean, Sphere, circle_line, torus
from geoswarm.potentials import HalfQuadratic, Lohe, PowerLaw

from helpers import MANIFOLDS, random_points


def test_velocity_single_atom_is_zero(manifold, rng):
    rho = EmpiricalMeasure(random_points(manifold, 1, rng))
    assert np.all(velocity(manifold, HalfQuadratic(), rho) == 0.0)


def test_velocity_two_points_on_line():
    rho = EmpiricalMeasure([[0.3], [1.7]], [0.5, 0.5])
    v = velocity(Euclidean(1), HalfQuadratic(), rho)
    assert np.allclose(v, [[0.7], [-0.7]], atol=1e-15)


def test_lohe_velocity_equal_masses(rng):
    S = Sphere(2, 0.1)
    X = random_points(S, 30, rng)
    v = velocity(S, Lohe(), EmpiricalMeasure(X))
    G = X @ X.T
    expect = (X[None, :, :] - G[:, :, None] * X[:, None, :]).mean(axis=1)
    assert np.max(np.abs(v - expect)) < 1e-12


def test_velocity_off_support_point(rng):
    S = Sphere(2, 0.1)
    X = random_points(S, 5, rng)
    rho = EmpiricalMeasure(X)
    full = velocity(S, HalfQuadratic(), rho)
    assert np.allclose(velocity(S, HalfQuadratic(), rho, X[2]), full[2], atol=1e-15)


def test_euler_gap_contracts_by_one_minus_h():
    rho = EmpiricalMeasure([[0.0], [1.0]])
    h = 0.05
    for _ in range(20):
        gap = rho.points[1, 0] - rho.points[0, 0]
        rho = step(Euclidean(1), HalfQuadratic(), rho, h)
        assert rho.points[1, 0] - rho.points[0, 0] == pytest.approx(gap * (1 - h), rel=1e-14)


def test_single_particle_stationary(manifold, rng):
    rho = EmpiricalMeasure(random_points(manifold, 1, rng))
    for scheme in ("geodesic_euler", "rk4_projected"):
        out = step(manifold, HalfQuadratic(), rho, 0.1, scheme)
        assert np.array_equal(out.points, rho.points)


def test_sphere_symmetric_pair():
    S = Sphere(2, 0.1)
    a = 0.5
    rho = EmpiricalMeasure([[math.sin(a), 0, math.cos(a)], [-math.sin(a), 0, math.cos(a)]])
    mirror = np.array([-1.0, 1.0, 1.0])
    for k in range(200):
        assert np.max(np.abs(velocity(S, HalfQuadratic(), rho, S.north))) < 1e-15
        rho = step(S, HalfQuadratic(), rho, 0.01, step_index=k + 1)
        assert np.max(np.abs(rho.points[0] * mirror - rho.points[1])) < 1e-12


def test_time_grid():
    assert time_grid(0.1, 0.0) == [0.0]
    g = time_grid(0.3, 1.0)
    assert g[-1] == 1.0 and len(g) == 5
    assert time_grid(0.25, 1.0) == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_t_end_zero_returns_initial_state():
    S = Sphere(2, 0.1)
    cfg = SimConfig(S, HalfQuadratic(), DiskSample(0.5, 7), t_end=0.0, seed=3)
    rec = simulate(cfg)
    assert rec.times == [0.0] and len(rec.states) == 1
    assert np.array_equal(rec.states[0].points, cfg.initial_measure().points)


@pytest.mark.parametrize("mname", sorted(MANIFOLDS))
def test_permutation_invariance_and_mass_conservation(mname):
    M = MANIFOLDS[mname]()
    rng = np.random.default_rng(7)
    X = random_points(M, 12, rng, radius=0.5)
    w = rng.dirichlet(np.ones(12))
    w /= w.sum()
    perm = rng.permutation(12)
    for scheme in ("geodesic_euler", "rk4_projected"):
        a = simulate(SimConfig(M, PowerLaw(2, 1), EmpiricalMeasure(X, w), h=0.02, t_end=0.4, scheme=scheme,
                               diagnostics=False))
        b = simulate(SimConfig(M, PowerLaw(2, 1), EmpiricalMeasure(X[perm], w[perm]), h=0.02, t_end=0.4,
                               scheme=scheme, diagnostics=False))
        for sa, sb in zip(a.states, b.states):
            assert np.array_equal(sa.points[perm], sb.points)
            assert np.array_equal(sa.masses, a.states[0].masses)


def test_euclidean_center_of_mass():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 3))
    w = rng.dirichlet(np.ones(40))
    w /= w.sum()
    rec = simulate(SimConfig(Euclidean(3), HalfQuadratic(), EmpiricalMeasure(X, w), h=0.01, t_end=2.0,
                             diagnostics=False))
    c0 = w @ X
    drift = max(np.max(np.abs(w @ s.points - c0)) for s in rec.states)
    assert drift < 1e-12 * 2.0


def test_abort_keeps_partial_record():
    # strongly repulsive flow pushes particles out of the sphere's admissible cap
    S = Sphere(2, 0.3)
    from geoswarm.potentials import Custom

    rep = Custom(lambda s: -5 * s, lambda s: -5 + 0 * s)
    cfg = SimConfig(S, rep, DiskSample(0.8, 10), h=0.05, t_end=20, seed=2)
    rec = simulate(cfg)
    assert rec.aborted
    assert rec.abort["step"] == rec.steps + 1
    assert len(rec.abort["coords"]) == 3
    assert rec.times[-1] == pytest.approx(rec.steps * 0.05)
    assert all(np.all(S.in_domain(s.points)) for s in rec.states)
    with pytest.raises(DomainViolation):
        step(S, rep, rec.states[-1], 0.05, step_index=rec.steps + 1)


def test_recording_includes_endpoints():
    cfg = SimConfig(Euclidean(1), HalfQuadratic(), EmpiricalMeasure([[0.0], [1.0]]), h=0.1, t_end=1.05,
                    record_every=4)
    rec = simulate(cfg)
    assert rec.times[0] == 0.0 and rec.times[-1] == 1.05
    assert rec.times == pytest.approx([0.0, 0.4, 0.8, 1.05])
    assert len(rec.diagnostics) == len(rec.times)


def test_velocity_bound_on_sphere():
    from geoswarm.analysis import constants_report

    S = Sphere(2, 0.2)
    for P in (HalfQuadratic(), PowerLaw(2, 1), Lohe()):
        bound = constants_report(P, S.epsilon, grid=10_000).velocity_bound
        rec = simulate(SimConfig(S, P, DiskSample(1.0, 40), h=0.01, t_end=1.0, seed=4, diagnostics=False))
        worst = max(np.max(S.norm(s.points, velocity(S, P, s))) for s in rec.states)
        assert worst <= bound


@pytest.mark.parametrize("factory", [torus, circle_line])
def test_product_decoupling(factory):
    M = factory(0.1)
    cfg = SimConfig(M, HalfQuadratic(), DiskSample(0.8, 20), h=0.01, t_end=3.0, seed=11)
    full, left, right = simulate_product_decoupled(cfg)
    assert len(full.states) == len(left.states) == len(right.states)
    for f, a, b in zip(full.states, left.states, right.states):
        pa, pb = M.split(f.points)
        assert np.max(np.abs(pa - a.points)) <= 1e-12
        assert np.max(np.abs(pb - b.points)) <= 1e-12


def test_product_decoupling_rejects_other_potentials():
    with pytest.raises(ValueError):
        simulate_product_decoupled(SimConfig(torus(0.1), Lohe(), DiskSample(0.5, 3)))
    with pytest.raises(ValueError):
        simulate_product_decoupled(SimConfig(Sphere(2, 0.1), HalfQuadratic(), DiskSample(0.5, 3)))


def test_cylinder_max_abs_z_abort():
    M = CylinderBand(0.1)
    X = np.array([[1.5, 0.0], [1.5, 40.0]])
    from geoswarm.potentials import Custom

    rep = Custom(lambda s: -s, lambda s: -1 + 0 * s)
    rec = simulate(SimConfig(M, rep, EmpiricalMeasure(X), h=0.1, t_end=100, max_abs_z=50.0))
    assert rec.aborted and "|z|" in rec.abort["message"]
    assert rec.z_extent > 50


def test_simconfig_validation():
    S = Sphere(2, 0.1)
    with pytest.raises(ValueError):
        SimConfig(S, HalfQuadratic(), DiskSample(0.5, 3), h=0.0)
    with pytest.raises(ValueError):
        SimConfig(S, HalfQuadratic(), DiskSample(0.5, 3), t_end=-1)
    with pytest.raises(ValueError):
        SimConfig(S, HalfQuadratic(), DiskSample(0.5, 3), scheme="leapfrog")
    with pytest.raises(ValueError):
        EmpiricalMeasure([[0.0]], [0.9])
    with pytest.raises(DomainViolation):
        SimConfig(S, HalfQuadratic(), EmpiricalMeasure([[0, 0, -1.0]])).initial_measure()
