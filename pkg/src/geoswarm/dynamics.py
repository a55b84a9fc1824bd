"""Particle dynamics: the interaction velocity field and its time integration.

An empirical measure whose atoms follow the particle system is an exact weak
solution of the aggregation equation, so simulating the atoms is simulating
the model.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainViolation
from .manifolds import CylinderBand, Product

GEODESIC_EULER = "geodesic_euler"
RK4_PROJECTED = "rk4_projected"
SCHEMES = (GEODESIC_EULER, RK4_PROJECTED)


class EmpiricalMeasure:
    """Atoms ``points`` (n, point_dim) with positive ``masses`` summing to one."""

    def __init__(self, points, masses=None):
        pts = np.array(points, dtype=float, copy=True)
        if pts.ndim == 1:
            pts = pts[:, None]
        n = pts.shape[0]
        if n < 1:
            raise ValueError("an empirical measure needs at least one atom")
        if masses is None:
            m = np.full(n, 1.0 / n)
        else:
            m = np.array(masses, dtype=float, copy=True)
            if m.shape != (n,):
                raise ValueError("masses must have one entry per point")
            if np.any(m <= 0):
                raise ValueError("masses must be positive")
            if abs(m.sum() - 1.0) > 1e-12:
                raise ValueError(f"masses sum to {m.sum()!r}, not 1")
        self.points = pts
        self.masses = m
        self.points.flags.writeable = False
        self.masses.flags.writeable = False

    @property
    def n(self):
        return self.points.shape[0]

    def is_uniform(self):
        return bool(np.all(self.masses == self.masses[0]))

    def with_points(self, points):
        out = object.__new__(EmpiricalMeasure)
        out.points = np.array(points, dtype=float)
        out.masses = self.masses
        out.points.flags.writeable = False
        return out

    def __repr__(self):
        return f"EmpiricalMeasure(n={self.n})"


@dataclass
class DiskSample:
    """Initial data drawn uniformly from a closed geodesic disk."""

    radius: float
    n: int
    center: Optional[np.ndarray] = None
    masses: Optional[np.ndarray] = None


@dataclass
class SimConfig:
    manifold: object
    potential: object
    initial: object  # EmpiricalMeasure or DiskSample
    h: float = 1e-2
    t_end: float = 10.0
    scheme: str = GEODESIC_EULER
    record_every: int = 1
    seed: int = 0
    disk_center: Optional[np.ndarray] = None
    max_abs_z: Optional[float] = None
    diagnostics: bool = True

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step h must be positive")
        if not self.t_end >= 0:
            raise ValueError("t_end must be nonnegative")
        if int(self.record_every) < 1:
            raise ValueError("record_every must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        self.record_every = int(self.record_every)

    def initial_measure(self):
        init = self.initial
        if isinstance(init, EmpiricalMeasure):
            self.manifold.check(init.points, "initial point")
            return init
        center = self.manifold.default_center() if init.center is None else np.asarray(init.center, dtype=float)
        pts = self.manifold.sample_disk(center, init.radius, init.n, self.seed)
        return EmpiricalMeasure(pts, init.masses)

    def center(self):
        if self.disk_center is not None:
            return np.asarray(self.disk_center, dtype=float)
        if isinstance(self.initial, DiskSample) and self.initial.center is not None:
            return np.asarray(self.initial.center, dtype=float)
        return self.manifold.default_center()


@dataclass
class TrajectoryRecord:
    manifold: object
    times: list = field(default_factory=list)
    states: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    abort: Optional[dict] = None
    z_extent: Optional[float] = None
    steps: int = 0

    @property
    def aborted(self):
        return self.abort is not None

    def series(self, key):
        return np.array([d[key] for d in self.diagnostics])


def velocity(M, P, rho, x=None):
    """v(x) = sum_j m_j 2 g'(d(x, x_j)^2) log_x x_j, at the atoms of ``rho`` by default."""
    X = rho.points if x is None else np.asarray(x, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    # sum over atoms in a canonical order so relabelling the atoms permutes
    # the result exactly instead of perturbing it by rounding
    order = np.lexsort((rho.masses,) + tuple(rho.points.T[::-1]))
    Y = rho.points[order]
    D = M.pairwise_distance(X, Y)
    coef = rho.masses[order][None, :] * (2.0 * P.dg(D * D))
    v = M.weighted_log_sum(X, Y, coef, dist=D)
    return v[0] if single else v


def _check_state(M, X, step):
    inside = np.atleast_1d(M.in_domain(X))
    if not np.all(inside):
        i = int(np.flatnonzero(~inside)[0])
        raise DomainViolation(f"particle {i} left the admissible domain at step {step}",
                              coords=X[i], step=step, particle=i)


def step(M, P, state, h, scheme=GEODESIC_EULER, step_index=None):
    """One synchronous update of all atoms; masses are carried over unchanged."""
    X = state.points
    if scheme == GEODESIC_EULER:
        new = M.exp(X, h * velocity(M, P, state), check=False)
    elif scheme == RK4_PROJECTED:
        def slope(Y):
            return velocity(M, P, state.with_points(Y))

        k1 = slope(X)
        k2 = slope(M.retract(X, 0.5 * h * k1))
        k3 = slope(M.retract(X, 0.5 * h * k2))
        k4 = slope(M.retract(X, h * k3))
        incr = M.project_tangent(X, (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        new = M.retract(X, incr)
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    _check_state(M, new, step_index)
    return state.with_points(new)


def _diagnose(M, P, rho, t, center):
    from . import analysis

    energy = analysis.discrete_energy(P, M, rho)
    diam, _ = analysis.diameter(M, rho)
    return {
        "t": float(t),
        "E_full": energy.full,
        "E_offdiag": energy.offdiag,
        "dissipation": analysis.dissipation(M, P, rho),
        "diameter": diam,
        "d_max": float(np.max(M.distance(rho.points, center))),
    }


def time_grid(h, t_end):
    """Step times; the final step is shortened so the grid ends exactly at t_end."""
    n_steps = int(math.ceil(t_end / h - 1e-9)) if t_end > 0 else 0
    times = [k * h for k in range(n_steps)] + [float(t_end)]
    return times


def simulate(cfg: SimConfig) -> TrajectoryRecord:
    """Integrate from the initial measure to t_end, recording every ``record_every`` steps.

    t = 0 and t = t_end are always recorded. A DomainViolation stops the run;
    the record then holds everything up to the last good state plus ``abort``.
    """
    M, P = cfg.manifold, cfg.potential
    rho = cfg.initial_measure()
    center = cfg.center()
    times = time_grid(cfg.h, cfg.t_end)
    rec = TrajectoryRecord(manifold=M)
    cyl = isinstance(M, CylinderBand)
    z_ext = M.z_extent(rho.points) if cyl else None

    def record(state, t):
        rec.times.append(float(t))
        rec.states.append(state)
        if cfg.diagnostics:
            rec.diagnostics.append(_diagnose(M, P, state, t, center))

    record(rho, 0.0)
    n_steps = len(times) - 1
    for k in range(n_steps):
        dt = times[k + 1] - times[k]
        try:
            rho = step(M, P, rho, dt, cfg.scheme, step_index=k + 1)
        except DomainViolation as exc:
            rec.abort = {**exc.as_dict(), "time": float(times[k + 1])}
            if rec.times[-1] != times[k]:
                record(rho, times[k])
            break
        rec.steps = k + 1
        if cyl:
            z_ext = max(z_ext, M.z_extent(rho.points))
            if cfg.max_abs_z is not None and z_ext > cfg.max_abs_z:
                i = int(np.argmax(np.abs(rho.points[:, 1])))
                rec.abort = {"message": f"|z| exceeded {cfg.max_abs_z}", "coords": [float(c) for c in rho.points[i]],
                             "step": k + 1, "particle": i, "time": float(times[k + 1])}
                record(rho, times[k + 1])
                break
        if (k + 1) % cfg.record_every == 0 or k + 1 == n_steps:
            record(rho, times[k + 1])
    rec.z_extent = z_ext
    return rec


def _component_config(cfg, comp, side, rho0):
    P = cfg.manifold
    pts = P.split(rho0.points)[side]
    center = P.split(cfg.center())[side]
    return SimConfig(
        manifold=comp,
        potential=cfg.potential,
        initial=EmpiricalMeasure(pts, rho0.masses),
        h=cfg.h,
        t_end=cfg.t_end,
        scheme=cfg.scheme,
        record_every=cfg.record_every,
        seed=cfg.seed,
        disk_center=center,
        diagnostics=cfg.diagnostics,
    )


def simulate_product_decoupled(cfg: SimConfig):
    """Run a product-manifold system and each factor on its own.

    With g(s) = s/2 the weights 2 g' are constant, so the coupled system
    splits exactly into the factor systems; the three records are returned
    for comparison.
    """
    from .potentials import HalfQuadratic

    if not isinstance(cfg.manifold, Product):
        raise ValueError("decoupled runs need a Product manifold")
    if not isinstance(cfg.potential, HalfQuadratic):
        raise ValueError("decoupling holds for the half-quadratic potential only")
    rho0 = cfg.initial_measure()
    full_cfg = SimConfig(**{**cfg.__dict__, "initial": rho0})
    full = simulate(full_cfg)
    left = simulate(_component_config(cfg, cfg.manifold.left, 0, rho0))
    right = simulate(_component_config(cfg, cfg.manifold.right, 1, rho0))
    return full, left, right
