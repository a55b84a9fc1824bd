"""Intrinsic 1-Wasserstein distance between empirical measures and the
mean-field experiment built on it."""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .analysis import constants_report
from .dynamics import DiskSample, simulate
from .errors import Degenerate, TimeGridMismatch, TooLarge
from .manifolds import Sphere


@dataclass
class TransportPlan:
    rows: int
    cols: int
    flow: np.ndarray
    cost: float


def _uniform_equal(mu, nu):
    return mu.n == nu.n and mu.is_uniform() and nu.is_uniform()


def w1(M, mu, nu, method="auto"):
    """Exact W1 with the geodesic cost d(x_i, y_j).

    ``method`` is "assignment" (uniform equal-size measures only), "simplex",
    or "auto", which picks the assignment solver whenever it applies.
    Returns ``(distance, TransportPlan)``.
    """
    a = np.asarray(mu.masses, dtype=float)
    b = np.asarray(nu.masses, dtype=float)
    if a.sum() <= 0 or b.sum() <= 0:
        raise Degenerate("measure with zero total mass")
    C = M.pairwise_distance(mu.points, nu.points)
    m, n = C.shape
    if method == "auto":
        method = "assignment" if _uniform_equal(mu, nu) else "simplex"
    if method == "assignment":
        if not _uniform_equal(mu, nu):
            raise ValueError("assignment solver needs uniform measures of equal size")
        perm = kernels.linear_assignment(C)
        flow = np.zeros((m, n))
        flow[np.arange(m), perm] = 1.0 / m
        cost = float(C[np.arange(m), perm].sum() / m)
    elif method == "simplex":
        # tiny mismatch in totals would leave the last basic cell infeasible
        b = b * (a.sum() / b.sum())
        rows, cols, flows, _ = kernels.network_simplex(a, b, C)
        flow = np.zeros((m, n))
        np.add.at(flow, (rows, cols), flows)
        cost = float(np.sum(flows * C[rows, cols]))
    else:
        raise ValueError(f"unknown method {method!r}")
    return cost, TransportPlan(m, n, flow, cost)


def w1_bruteforce(M, mu, nu):
    """Minimum over all n! matchings of the mean matched distance (n <= 8)."""
    if mu.n != nu.n or not (mu.is_uniform() and nu.is_uniform()):
        raise ValueError("brute force needs uniform measures of equal size")
    n = mu.n
    if n > 8:
        raise TooLarge(f"n = {n} > 8")
    C = M.pairwise_distance(mu.points, nu.points)
    idx = np.arange(n)
    best = min(C[idx, list(p)].sum() for p in itertools.permutations(range(n)))
    return float(best / n)


def w1_sup_over_time(traj_a, traj_b, M=None):
    """max over the common recording times of W1(rho_t, sigma_t)."""
    ta = np.asarray(traj_a.times)
    tb = np.asarray(traj_b.times)
    if ta.shape != tb.shape or np.any(np.abs(ta - tb) > 1e-12):
        raise TimeGridMismatch("trajectories are recorded on different time grids")
    M = traj_a.manifold if M is None else M
    vals = [w1(M, a, b)[0] for a, b in zip(traj_a.states, traj_b.states)]
    return float(max(vals)), vals


def sample_seed(seed, n):
    """Seed for the n-atom sample of batch ``seed``; independent across n."""
    return int(np.random.SeedSequence([int(seed), int(n)]).generate_state(1)[0])


def _run(base_cfg, n, seed):
    init = base_cfg.initial
    cfg = replace(base_cfg, initial=replace(init, n=int(n), masses=None), seed=sample_seed(seed, n),
                  diagnostics=False)
    return simulate(cfg)


def meanfield_experiment(base_cfg, n_list, reference_n, seeds=(0,), reference_seed=None, threads=1, grid=100_000):
    """Compare n-atom runs with one shared reference run of ``reference_n`` atoms.

    Each row holds n, seed, W1 at t = 0, sup over recorded times of W1, their
    ratio, and the stability factor r(eps, t_end) (sphere only, else NaN).
    The sample for (seed, n) is drawn with its own seed, so runs for
    different n are independent; n == reference_n with the reference seed
    reproduces the reference run.
    """
    if not isinstance(base_cfg.initial, DiskSample):
        raise ValueError("mean-field runs sample their initial data from a disk")
    if reference_n < max(n_list, default=0):
        raise ValueError("reference_n must be at least max(n_list)")
    ref_seed = seeds[0] if reference_seed is None else reference_seed
    ref = _run(base_cfg, reference_n, ref_seed)
    M = base_cfg.manifold
    if isinstance(M, Sphere):
        r_bound = constants_report(base_cfg.potential, M.epsilon, grid).r(base_cfg.t_end)
    else:
        r_bound = math.nan

    jobs = [(n, s) for s in seeds for n in n_list]

    def one(job):
        n, s = job
        run = _run(base_cfg, n, s)
        sup, vals = w1_sup_over_time(run, ref, M)
        w0 = vals[0]
        ratio = sup / w0 if w0 > 0 else (0.0 if sup == 0 else math.inf)
        return {"n": int(n), "seed": int(s), "w1_initial": w0, "w1_sup": sup, "ratio": ratio, "r_bound": r_bound}

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(one, jobs))
    else:
        rows = [one(j) for j in jobs]
    return rows
