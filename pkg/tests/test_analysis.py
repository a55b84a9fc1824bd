import math

import numpy as np
import pytest

from geoswarm.analysis import (
    audit_center_field,
    audit_obtuse_cone,
    audit_suite,
    consensus_report,
    constants_report,
    diameter,
    discrete_energy,
    dissipation,
    f_prime,
    random_measure,
    weighted_center_field,
)
from geoswarm.dynamics import DiskSample, EmpiricalMeasure, SimConfig, simulate, velocity
from geoswarm.errors import DomainViolation, HypothesisUnmet
from geoswarm.manifolds import Euclidean, Sphere
from geoswarm.potentials import Custom, HalfQuadratic, Lohe, PowerLaw
from geoswarm.transport import w1

from helpers import MANIFOLDS, random_points


def test_energy_examples(manifold, rng):
    P = PowerLaw(2, 1.5)
    rho = EmpiricalMeasure(random_points(manifold, 1, rng))
    e = discrete_energy(P, manifold, rho)
    assert e.full == 0.5 * P.g(0.0) and e.offdiag == 0.0
    S = Sphere(2, 0.1)
    e = discrete_energy(HalfQuadratic(), S, EmpiricalMeasure([[1.0, 0, 0], [0, 1.0, 0]]))
    assert e.offdiag == pytest.approx(math.pi**2 / 32, rel=1e-15)


def test_dissipation_examples(manifold, rng):
    x = random_points(manifold, 1, rng)
    assert dissipation(manifold, Lohe(), EmpiricalMeasure(x)) == 0.0
    assert dissipation(manifold, HalfQuadratic(), EmpiricalMeasure(np.repeat(x, 5, axis=0))) == 0.0
    assert dissipation(Euclidean(1), HalfQuadratic(), EmpiricalMeasure([[2.0], [3.0]])) == 0.25


def test_diameter_examples(rng):
    S = Sphere(2, 0.1)
    assert diameter(S, EmpiricalMeasure([[0, 0, 1.0]]))[0] == 0.0
    a = 0.7
    d, pair = diameter(S, EmpiricalMeasure([[0, 0, 1.0], [math.sin(a), 0, math.cos(a)]]))
    assert d == pytest.approx(0.7, abs=1e-15) and pair == (0, 1)


def test_diameter_matches_bruteforce_and_shuffle(manifold, rng):
    X = random_points(manifold, 15, rng)
    d, (i, j) = diameter(manifold, EmpiricalMeasure(X))
    brute = max(float(manifold.distance(X[a], X[b])) for a in range(15) for b in range(15))
    assert d == pytest.approx(brute, abs=1e-14)
    assert float(manifold.distance(X[i], X[j])) == d
    perm = rng.permutation(15)
    assert diameter(manifold, EmpiricalMeasure(X[perm]))[0] == pytest.approx(d, abs=1e-15)


def test_diameter_tie_break():
    X = np.array([[0.0], [1.0], [2.0], [0.0]])
    d, pair = diameter(Euclidean(1), EmpiricalMeasure(X))
    assert d == 2.0 and pair == (0, 2)


def test_center_field_examples(rng):
    S = Sphere(2, 0.1)
    y = random_points(S, 1, rng)
    x = random_points(S, 20, rng)
    c = weighted_center_field(Lohe(), S, EmpiricalMeasure(y), x)
    assert np.allclose(c, np.broadcast_to(y, c.shape), atol=1e-14)
    Y = random_points(S, 8, rng)
    m = rng.dirichlet(np.ones(8))
    m /= m.sum()
    rho = EmpiricalMeasure(Y, m)
    c = weighted_center_field(HalfQuadratic(), S, rho, x)
    d = S.pairwise_distance(x, Y)
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(d > 0, d / np.sin(d), 1.0)
    assert np.allclose(c, (f * m) @ Y, atol=1e-13)


@pytest.mark.parametrize("P", [HalfQuadratic(), Lohe(), PowerLaw(2, 1), PowerLaw(1.3, 0.4)])
def test_velocity_reconstruction_from_center_field(P, rng):
    S = Sphere(2, 0.1)
    rho = EmpiricalMeasure(random_points(S, 25, rng))
    x = random_points(S, 40, rng)
    c = weighted_center_field(P, S, rho, x)
    v = velocity(S, P, rho, x)
    # attractive flow: v = c - (c.x) x, the tangential part of c pointing toward the atoms
    recon = c - np.einsum("ij,ij->i", c, x)[:, None] * x
    assert np.max(np.abs(v - recon)) < 1e-10


def test_audits_pass_for_lohe_and_quadratic():
    S = Sphere(2, 0.05)
    for P in (Lohe(), HalfQuadratic()):
        rep = audit_suite(P, S, 0.6, 1.0, measures=10, support_n=10, trials_per_measure=100, cone_configs=200,
                          seed=1)
        assert rep["c_field"].ok and rep["obtuse_cone"].ok
        assert rep["c_field"].trials == 1000


def test_audit_single_atom_lohe_pair_equality():
    S = Sphere(2, 0.05)
    y = np.array([0.3, 0.1, math.sqrt(1 - 0.1)])
    rep = audit_center_field(Lohe(), S, EmpiricalMeasure([y]), 0.6, 1.0, n_trials=500, seed=4)
    # G == 1 and a single atom: the pair margin is identically zero
    assert abs(rep.margins["pair"]) < 1e-14
    assert rep.ok


def test_audit_rejects_bad_inputs():
    S = Sphere(2, 0.05)
    rho = EmpiricalMeasure([[0, 0, 1.0]])
    with pytest.raises(HypothesisUnmet):
        audit_center_field(PowerLaw(2, 1), S, rho, 0.6, 1.0)
    far = EmpiricalMeasure([[1.0, 0, 0.2] / np.linalg.norm([1.0, 0, 0.2])])
    with pytest.raises(DomainViolation):
        audit_center_field(Lohe(), S, far, 0.6, 1.0)
    with pytest.raises(DomainViolation):
        audit_obtuse_cone(S, [[0, 0, 1.0], [1.0, 0, 0]])


def test_obtuse_cone_examples():
    S = Sphere(2, 0.05)
    pts = np.array([[math.sin(a), 0, math.cos(a)] for a in (-0.6, -0.1, 0.2, 0.7)])
    rep = audit_obtuse_cone(S, pts)
    assert rep.ok and rep.details["pair"] == [0, 3]
    two = audit_obtuse_cone(S, pts[[0, 3]])
    assert two.margins["product"] == pytest.approx(0.0, abs=1e-15)


def test_constants_report_examples():
    rep = constants_report(HalfQuadratic(), math.pi / 4)
    assert rep.C_f == pytest.approx(math.pi / 2, abs=1e-6)
    assert rep.C_g_prime == 0.5 and rep.L_g_prime == 0.0
    assert rep.L == rep.Lip == pytest.approx(2 * (rep.C_f + rep.L_f), rel=1e-15)
    assert rep.r(0) == 1.0
    assert rep.L_f == pytest.approx(rep.L_f_fd, rel=1e-4)
    assert rep.velocity_bound == math.pi
    ts = [0.0, 0.5, 1.0, 2.0]
    vals = [rep.r(t) for t in ts]
    assert all(a < b for a, b in zip(vals, vals[1:]))
    small = constants_report(HalfQuadratic(), 0.05, times=(10.0,))
    assert small.r(10.0) == math.inf and small.to_dict()["r"]["10.0"] == "inf"


def test_f_prime_matches_finite_difference():
    t = np.linspace(1e-4, 3.0, 500)
    fd = ((t + 1e-6) / np.sin(t + 1e-6) - (t - 1e-6) / np.sin(t - 1e-6)) / 2e-6
    assert np.allclose(f_prime(t), fd, rtol=1e-6, atol=1e-8)


def test_consensus_report_examples():
    S = Sphere(2, 0.1)
    x = np.array([0, 0, 1.0])
    same = simulate(SimConfig(S, HalfQuadratic(), EmpiricalMeasure([x, x]), t_end=0.5))
    rep = consensus_report(same, 1e-3)
    assert rep.reached and rep.time_to_tol == 0.0
    line = simulate(SimConfig(Euclidean(1), HalfQuadratic(), EmpiricalMeasure([[0.0], [1.0]]), h=0.01, t_end=10,
                              scheme="rk4_projected", record_every=10))
    rep = consensus_report(line, 1e-3)
    assert rep.reached and abs(rep.time_to_tol - math.log(1e3)) <= 0.1
    assert rep.limit_point_estimate == pytest.approx([0.5], abs=1e-12)
    rep_custom = Custom(lambda s: -s, lambda s: -1 + 0 * s)
    apart = simulate(SimConfig(Euclidean(1), rep_custom, EmpiricalMeasure([[0.0], [1.0]]), h=0.01, t_end=2))
    rep = consensus_report(apart, 1e-3)
    assert not rep.reached and rep.time_to_tol is None
    assert np.all(np.diff(apart.series("diameter")) >= 0)


def test_gradient_flow_consistency(rng):
    # v(x_i) = -n grad_{x_i} E_n for equal masses, E_n = (1/n^2) sum_{i<j} K
    for name in ("sphere2", "cylinder", "torus", "euclidean2"):
        M = MANIFOLDS[name]()
        X = random_points(M, 6, rng, radius=0.4)
        n = len(X)
        rho = EmpiricalMeasure(X)
        for P in (HalfQuadratic(), PowerLaw(2, 1), Lohe()):
            v = velocity(M, P, rho)
            for i in range(n):
                u = M.random_unit_tangent(X[i], rng)
                t = 1e-5

                def E(y):
                    Z = X.copy()
                    Z[i] = y
                    return discrete_energy(P, M, EmpiricalMeasure(Z)).offdiag * n * n / n**2

                dE = (E(M.exp(X[i], t * u, check=False)) - E(M.exp(X[i], -t * u, check=False))) / (2 * t)
                # E_offdiag with masses 1/n is (1/n^2) sum_{i<j} K, so dE is the directional derivative of E_n
                want = -float(M.inner(X[i], v[i], u)) / n
                assert abs(dE - want) <= 1e-6 * max(abs(want), 1e-4)


def test_velocity_measure_lipschitz(rng):
    S = Sphere(2, 0.3)
    for P in (HalfQuadratic(), Lohe(), PowerLaw(2, 1)):
        Lip = constants_report(P, S.epsilon, grid=20_000).Lip
        for _ in range(20):
            rho = random_measure(S, 0.9, 7, rng)
            sig = random_measure(S, 0.9, 9, rng)
            x = random_points(S, 200, rng)
            gap = np.max(S.norm(x, velocity(S, P, rho, x) - velocity(S, P, sig, x)))
            assert gap <= Lip * w1(S, rho, sig)[0] + 1e-9


def test_energy_decreases_on_attractive_run():
    S = Sphere(2, 0.05)
    for P in (HalfQuadratic(), Lohe(), PowerLaw(2, 1)):
        rec = simulate(SimConfig(S, P, DiskSample(0.6, 30), h=0.01, t_end=2.0, seed=9))
        assert np.all(np.diff(rec.series("E_full")) <= 1e-9)
