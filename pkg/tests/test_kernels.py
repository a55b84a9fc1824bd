"""The compiled and numpy kernels agree, and both agree with scipy."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import linear_sum_assignment, linprog

from geoswarm import _pykernels, kernels

try:
    from geoswarm import _kernels
except ImportError:  # pragma: no cover
    _kernels = None

BACKENDS = [_pykernels] + ([_kernels] if _kernels is not None else [])
needs_cython = pytest.mark.skipif(_kernels is None, reason="compiled kernels not built")


def _unit(rng, n, d=3):
    x = rng.standard_normal((n, d))
    x[:, -1] = np.abs(x[:, -1]) + 1.0
    return x / np.linalg.norm(x, axis=1)[:, None]


def _lp_value(a, b, C):
    m, n = C.shape
    A = np.vstack([np.kron(np.eye(m), np.ones(n)), np.kron(np.ones(m), np.eye(n))])
    res = linprog(C.ravel(), A_eq=A, b_eq=np.concatenate([a, b]), method="highs")
    return res.fun


def test_backend_reported():
    assert kernels.BACKEND in ("python", "cython")
    assert kernels.get_backend("python") is _pykernels


def test_theta_over_sin_series_matches_direct():
    t = np.array([0.0, 1e-8, 5e-5, 9.99e-5, 1.01e-4, 0.5, 3.0])
    f = kernels.theta_over_sin(t)
    assert f[0] == 1.0
    big = t > 1e-6
    assert np.allclose(f[big], t[big] / np.sin(t[big]), rtol=1e-13)


@needs_cython
def test_sphere_kernels_agree(rng):
    X, Y = _unit(rng, 40), _unit(rng, 25)
    th_p = _pykernels.sphere_pairwise_angles(X, Y)
    th_c = _kernels.sphere_pairwise_angles(X, Y)
    assert np.max(np.abs(th_p - th_c)) < 1e-13
    coef = rng.random((40, 25))
    vp = _pykernels.sphere_log_weighted_sum(X, Y, th_p, coef)
    vc = _kernels.sphere_log_weighted_sum(X, Y, th_p, coef)
    assert np.max(np.abs(vp - vc)) < 1e-13


@needs_cython
@settings(max_examples=60, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.integers(0, 2**32 - 1), st.booleans())
def test_network_simplex_backends_identical(m, n, seed, integer_costs):
    rng = np.random.default_rng(seed)
    a = rng.random(m) + 0.05
    a /= a.sum()
    b = rng.random(n) + 0.05
    b /= b.sum()
    b *= a.sum() / b.sum()
    C = rng.integers(0, 3, (m, n)).astype(float) if integer_costs else rng.random((m, n))
    rp = _pykernels.network_simplex(a, b, C)
    rc = _kernels.network_simplex(a, b, C)
    for u, v in zip(rp[:3], rc[:3]):
        assert np.array_equal(u, v)
    assert rp[3] == rc[3]


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@settings(max_examples=40, deadline=None)
@given(m=st.integers(1, 8), n=st.integers(1, 8), seed=st.integers(0, 2**32 - 1), degenerate=st.booleans())
def test_network_simplex_matches_linprog(mod, m, n, seed, degenerate):
    rng = np.random.default_rng(seed)
    if degenerate:
        a = np.full(m, 1.0 / m)
        b = np.full(n, 1.0 / n)
        C = rng.integers(0, 2, (m, n)).astype(float)
    else:
        a = rng.dirichlet(np.ones(m))
        b = rng.dirichlet(np.ones(n)) * (a.sum())
        C = rng.random((m, n))
    b = b * (a.sum() / b.sum())
    rows, cols, flows, _ = mod.network_simplex(a, b, C)
    assert len(rows) == m + n - 1
    F = np.zeros((m, n))
    np.add.at(F, (rows, cols), flows)
    assert np.all(F >= 0)
    assert np.max(np.abs(F.sum(axis=1) - a)) < 1e-10
    assert np.max(np.abs(F.sum(axis=0) - b)) < 1e-10
    assert abs(np.sum(F * C) - _lp_value(a, b, C)) < 1e-9


@pytest.mark.parametrize("mod", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
@pytest.mark.parametrize("n", [1, 2, 3, 7, 30, 120])
def test_assignment_matches_scipy(mod, n, rng):
    C = rng.random((n, n))
    perm = mod.linear_assignment(C)
    assert sorted(perm.tolist()) == list(range(n))
    r, c = linear_sum_assignment(C)
    assert abs(C[np.arange(n), perm].sum() - C[r, c].sum()) < 1e-10


@needs_cython
def test_assignment_backends_identical(rng):
    C = np.round(rng.random((25, 25)) * 4)  # many ties
    assert np.array_equal(_pykernels.linear_assignment(C), _kernels.linear_assignment(C))


def test_assignment_rejects_rectangular():
    with pytest.raises(ValueError):
        kernels.linear_assignment(np.zeros((2, 3)))
