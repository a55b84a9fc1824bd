"""Energies, dissipation, diameters, stability constants and inequality audits."""

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .dynamics import EmpiricalMeasure, velocity
from .errors import DomainViolation
from .kernels import theta_over_sin
from .manifolds import Sphere
from .potentials import constants as potential_constants
from .potentials import g_cap_of_distance, require_lower_bound

AUDIT_TOL = -1e-10


class Energy(NamedTuple):
    full: float
    offdiag: float


def discrete_energy(P, M, rho):
    """E_full = 1/2 sum_ij m_i m_j K(x_i, x_j); E_offdiag = sum_{i<j} m_i m_j K(x_i, x_j)."""
    D = M.pairwise_distance(rho.points, rho.points)
    K = P.g(D * D)
    m = rho.masses
    full = 0.5 * float(m @ K @ m)
    self_part = 0.5 * float(np.sum(m * m * np.diag(K)))
    return Energy(full, full - self_part)


def dissipation(M, P, rho):
    """sum_i m_i |v(x_i)|^2, the energy decay rate along the flow."""
    v = velocity(M, P, rho)
    return float(np.sum(rho.masses * np.einsum("ij,ij->i", v, v)))


def diameter(M, rho):
    """Largest pairwise distance and the lexicographically smallest pair attaining it."""
    n = rho.n
    if n == 1:
        return 0.0, (0, 0)
    D = M.pairwise_distance(rho.points, rho.points)
    iu = np.triu_indices(n, k=1)
    vals = D[iu]
    k = int(np.argmax(vals))
    return float(vals[k]), (int(iu[0][k]), int(iu[1][k]))


def weighted_center_field(P, M, rho, x):
    """c(x) = sum_j m_j G(x, x_j) x_j (an ambient vector, not a tangent one)."""
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    D = M.pairwise_distance(X, rho.points)
    W = g_cap_of_distance(P, D) * rho.masses[None, :]
    c = W @ rho.points
    return c[0] if single else c


@dataclass
class AuditReport:
    name: str
    trials: int
    margins: dict
    violations: dict
    details: dict = field(default_factory=dict)

    @property
    def ok(self):
        return all(v == 0 for v in self.violations.values())

    def to_dict(self):
        return {"name": self.name, "trials": self.trials, "ok": self.ok, "worst_margins": self.margins,
                "violations": self.violations, **self.details}


def audit_center_field(P, M, rho, r, C, x=None, z=None, pairs=None, n_trials=1000, seed=0, tol=AUDIT_TOL):
    """Check the lower bound and cone inequalities for c(x) and the pairwise monotonicity inequality.

    For ``rho`` supported in the closed disk of radius r about the north pole:

    * ``norm``: |c(x)| - C cos r >= 0 for trial x in the domain,
    * ``cone``: c(x).z - |c(x)| cos 2r >= 0 for z in the closed disk,
    * ``pair``: c(x1).x2 + c(x2).x1 - c(x1).x1 - c(x2).x2 >= 0.

    Trial points not supplied are sampled with ``seed``. Margins are worst
    values; a violation is a margin below ``tol``.

    Raises
    ------
    HypothesisUnmet
        If G >= C fails on a distance grid over the domain.
    """
    if not isinstance(M, Sphere):
        raise TypeError("the c(x) audits are defined on the sphere")
    if r >= M.bound:
        raise ValueError("support radius must be below pi/2 - eps")
    require_lower_bound(P, M.epsilon, C)
    N = M.north
    dN = M.distance(rho.points, N)
    if np.any(dN > r + 1e-12):
        raise DomainViolation("support of rho is not inside the closed disk D_r", coords=rho.points[np.argmax(dN)])
    rng = np.random.default_rng(seed)
    domain_r = np.nextafter(M.bound, 0.0) - 1e-9
    if x is None:
        x = M.sample_disk(N, domain_r, n_trials, rng.integers(2**63))
    if z is None:
        z = M.sample_disk(N, r, n_trials, rng.integers(2**63))
    if pairs is None:
        pairs = (
            M.sample_disk(N, domain_r, n_trials, rng.integers(2**63)),
            M.sample_disk(N, domain_r, n_trials, rng.integers(2**63)),
        )
    cx = weighted_center_field(P, M, rho, x)
    norm_c = np.linalg.norm(cx, axis=1)
    m_norm = norm_c - C * math.cos(r)
    m_cone = np.einsum("ij,ij->i", cx, z) - norm_c * math.cos(2 * r)
    x1, x2 = pairs
    c1 = weighted_center_field(P, M, rho, x1)
    c2 = weighted_center_field(P, M, rho, x2)
    dot = lambda a, b: np.einsum("ij,ij->i", a, b)  # noqa: E731
    m_pair = dot(c1, x2) + dot(c2, x1) - dot(c1, x1) - dot(c2, x2)
    margins = {"norm": float(m_norm.min()), "cone": float(m_cone.min()), "pair": float(m_pair.min())}
    violations = {
        "norm": int(np.sum(m_norm < tol)),
        "cone": int(np.sum(m_cone < tol)),
        "pair": int(np.sum(m_pair < tol)),
    }
    return AuditReport("c_field_inequalities", int(len(x)), margins, violations, {"r": float(r), "C": float(C)})


def audit_obtuse_cone(M, points, center=None, tol=AUDIT_TOL):
    """For points in D_{pi/4}, check log_{x1} x2 . log_{x1} x_j >= 0 for the diameter pair (x1, x2)."""
    if not isinstance(M, Sphere):
        raise TypeError("the cone audit is defined on the sphere")
    X = np.asarray(points, dtype=float)
    c = M.north if center is None else np.asarray(center, dtype=float)
    dc = M.distance(X, c)
    if np.any(dc >= math.pi / 4 + 1e-12):
        i = int(np.argmax(dc))
        raise DomainViolation("point outside D_{pi/4}", coords=X[i], particle=i)
    rho = EmpiricalMeasure(X)
    diam, (i, j) = diameter(M, rho)
    u = M.log(X[i], X[j])
    w = M.log(np.broadcast_to(X[i], X.shape), X)
    prods = w @ u
    return AuditReport(
        "obtuse_cone",
        1,
        {"product": float(prods.min())},
        {"product": int(np.sum(prods < tol))},
        {"pair": [i, j], "diameter": diam},
    )


# -- constants -----------------------------------------------------------------


def f_prime(theta):
    """d/dt (t / sin t) = (sin t - t cos t) / sin^2 t, with its series near zero."""
    t = np.asarray(theta, dtype=float)
    small = t < 1e-3
    safe = np.where(small, 1.0, t)
    s = np.sin(safe)
    exact = (s - safe * np.cos(safe)) / (s * s)
    return np.where(small, t / 3.0 + 7.0 * t**3 / 90.0, exact)


@dataclass
class ConstantsReport:
    epsilon: float
    C_f: float
    L_f: float
    L_f_fd: float
    C_g_prime: float
    L_g_prime: float
    L: float
    Lip: float
    velocity_bound: float
    grid: int
    r_table: dict = field(default_factory=dict)

    @property
    def rate(self):
        return self.Lip + self.L + 4.0 * math.pi * self.C_g_prime

    def r(self, t):
        """Stability factor exp((Lip + L + 4 pi C_g') t); overflows to inf."""
        with np.errstate(over="ignore"):
            return float(np.exp(self.rate * float(t)))

    def to_dict(self):
        def enc(v):
            return v if math.isfinite(v) else str(v)

        out = {k: enc(getattr(self, k)) for k in
               ("epsilon", "C_f", "L_f", "L_f_fd", "C_g_prime", "L_g_prime", "L", "Lip", "velocity_bound")}
        out["grid"] = self.grid
        out["rate"] = enc(self.rate)
        out["r"] = {str(t): enc(v) for t, v in self.r_table.items()}
        return out


def constants_report(P, epsilon, grid=100_000, times=(0.0,)):
    """Lipschitz and stability constants of the velocity field on D_eps.

    C_f and L_f are grid maxima of f(t) = t/sin t and f' on [0, pi - 2 eps];
    L_f is taken from the analytic derivative and ``L_f_fd`` is the
    finite-difference cross-check.
    """
    if not 0 < epsilon < math.pi / 2:
        raise ValueError("epsilon must lie in (0, pi/2)")
    theta = np.linspace(0.0, math.pi - 2.0 * epsilon, grid)
    fv = theta_over_sin(theta)
    C_f = float(np.max(fv))
    L_f = float(np.max(f_prime(theta)))
    L_f_fd = float(np.max(np.diff(fv) / np.diff(theta)))
    pc = potential_constants(P, epsilon, grid)
    L = 4.0 * math.pi**2 * pc.L_g_prime + 4.0 * pc.C_g_prime * (C_f + L_f)
    Lip = 4.0 * math.pi**2 * pc.L_g_prime + 4.0 * pc.C_g_prime * (L_f + C_f)
    rep = ConstantsReport(
        epsilon=float(epsilon), C_f=C_f, L_f=L_f, L_f_fd=L_f_fd, C_g_prime=pc.C_g_prime,
        L_g_prime=pc.L_g_prime, L=L, Lip=Lip, velocity_bound=2.0 * math.pi * pc.C_g_prime, grid=int(grid),
    )
    rep.r_table = {float(t): rep.r(t) for t in times}
    return rep


# -- consensus -----------------------------------------------------------------


@dataclass
class ConsensusReport:
    reached: bool
    time_to_tol: Optional[float]
    final_diameter: float
    limit_point_estimate: np.ndarray

    def to_dict(self):
        return {"reached": self.reached, "time_to_tol": self.time_to_tol, "final_diameter": self.final_diameter,
                "limit_point_estimate": [float(c) for c in self.limit_point_estimate]}


def intrinsic_mean(M, rho, sweeps=10):
    """Weighted Karcher-style mean by fixed-point log/exp averaging."""
    p = rho.points[int(np.argmax(rho.masses))]
    for _ in range(sweeps):
        step = rho.masses @ M.log(np.broadcast_to(p, rho.points.shape), rho.points)
        p = M.exp(p, step, check=False)
    return p


def consensus_report(traj, tol):
    """First recorded time with diameter <= tol, and the final state's limit point."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    M = traj.manifold
    if traj.diagnostics:
        diams = traj.series("diameter")
    else:
        diams = np.array([diameter(M, s)[0] for s in traj.states])
    hit = np.flatnonzero(diams <= tol)
    final = float(diams[-1])
    return ConsensusReport(
        reached=bool(final <= tol),
        time_to_tol=float(traj.times[hit[0]]) if hit.size else None,
        final_diameter=final,
        limit_point_estimate=intrinsic_mean(M, traj.states[-1]),
    )


def random_measure(M, r, n, rng):
    """n atoms uniform in the closed disk D_r about the north pole with Dirichlet masses."""
    pts = M.sample_disk(M.north, r, n, rng.integers(2**63))
    m = rng.dirichlet(np.ones(n))
    return EmpiricalMeasure(pts, m / m.sum())


def audit_suite(P, M, r, C, measures=100, support_n=10, trials_per_measure=100, cone_configs=10_000, cone_n=10,
                seed=0):
    """Randomized audits of the c(x) inequalities and of the obtuse-cone property.

    ``measures * trials_per_measure`` trials for the c(x) inequalities, each
    measure with ``support_n`` atoms in D_r; ``cone_configs`` random
    ``cone_n``-point configurations in D_{pi/4} for the cone property.
    Returns a dict of combined reports.
    """
    rng = np.random.default_rng(seed)
    margins = {"norm": math.inf, "cone": math.inf, "pair": math.inf}
    viol = {"norm": 0, "cone": 0, "pair": 0}
    for _ in range(measures):
        rho = random_measure(M, r, support_n, rng)
        rep = audit_center_field(P, M, rho, r, C, n_trials=trials_per_measure, seed=rng.integers(2**63))
        for k in margins:
            margins[k] = min(margins[k], rep.margins[k])
            viol[k] += rep.violations[k]
    c_rep = AuditReport("c_field_inequalities", measures * trials_per_measure, margins, viol,
                        {"r": float(r), "C": float(C), "measures": measures})
    cone_r = math.pi / 4 - 1e-9
    worst, bad = math.inf, 0
    if cone_configs:
        cone_M = M if cone_r < M.bound else Sphere(M.k, math.pi / 4 - 1e-6)
        for _ in range(cone_configs):
            pts = cone_M.sample_disk(cone_M.north, cone_r, cone_n, rng.integers(2**63))
            rep = audit_obtuse_cone(cone_M, pts)
            worst = min(worst, rep.margins["product"])
            bad += rep.violations["product"]
    cone_rep = AuditReport("obtuse_cone", cone_configs, {"product": worst}, {"product": bad}, {"n": cone_n})
    return {"c_field": c_rep, "obtuse_cone": cone_rep}
