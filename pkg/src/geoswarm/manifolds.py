"""Riemannian primitives on the sphere, the cylinder band, flat space, a
circular arc, and products of these.

Points and tangent vectors are plain float arrays whose last axis holds the
coordinates, so every method broadcasts over leading batch axes. Storage
coordinates are ambient for the sphere and Euclidean space, and chart
coordinates for the circle arc and the cylinder band (angle, height); the
chart is an isometry onto its image, so tangent vectors of chart manifolds are
stored in chart components as well. ``to_ambient`` gives embedded coordinates.
"""

import math

import numpy as np

from . import kernels
from .errors import DomainViolation, NearAntipodal

ANTIPODAL_GUARD = 1e-6
DOMAIN_SLACK = 1e-12


def _sq_norm(v):
    return np.einsum("...i,...i->...", v, v)


class Manifold:
    """Common interface. Subclasses set the dimensions and the geometry."""

    point_dim: int
    tangent_dim: int
    ambient_dim: int
    intrinsic_dim: int
    has_chart = False

    # -- basic geometry -----------------------------------------------------

    def distance(self, x, y):
        raise NotImplementedError

    def log(self, x, y):
        raise NotImplementedError

    def exp(self, x, v, check=True):
        raise NotImplementedError

    def grad_dist_sq(self, x, y):
        """Gradient at x of d(., y)^2, i.e. -2 log_x y."""
        return -2.0 * self.log(x, y)

    def project_tangent(self, x, u):
        return np.array(u, dtype=float, copy=True)

    def retract(self, x, v):
        """First-order retraction used by the projected RK4 stages."""
        return np.asarray(x, dtype=float) + np.asarray(v, dtype=float)

    def inner(self, x, u, w):
        return np.einsum("...i,...i->...", np.asarray(u, dtype=float), np.asarray(w, dtype=float))

    def norm(self, x, u):
        return np.sqrt(self.inner(x, u, u))

    # -- domain ---------------------------------------------------------------

    def in_domain(self, x):
        raise NotImplementedError

    def contains(self, x, disk=None):
        """Membership in the admissible domain and, optionally, a closed disk.

        ``disk`` is ``(center, radius)``. Works on single points (returns a
        bool) or on batches (returns a bool array).
        """
        x = np.asarray(x, dtype=float)
        ok = self.in_domain(x)
        if disk is not None:
            center, radius = disk
            ok = ok & (self.distance(x, np.asarray(center, dtype=float)) <= radius + DOMAIN_SLACK)
        if np.ndim(ok) == 0:
            return bool(ok)
        return ok

    def check(self, x, what="point"):
        x = np.asarray(x, dtype=float)
        inside = np.atleast_1d(self.in_domain(x))
        if not np.all(inside):
            bad = int(np.flatnonzero(~inside)[0])
            coords = x.reshape(-1, self.point_dim)[bad]
            raise DomainViolation(f"{what} outside admissible domain of {self!r}", coords=coords,
                                  particle=bad if x.ndim > 1 else None)

    def default_center(self):
        raise NotImplementedError

    def check_disk(self, center, radius):
        """Raise DomainViolation unless the closed disk lies in the domain."""
        raise NotImplementedError

    # -- batched helpers ------------------------------------------------------

    def pairwise_distance(self, X, Y):
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return self.distance(X[:, None, :], Y[None, :, :])

    def weighted_log_sum(self, X, Y, coef, dist=None):
        """Row i is sum_j coef[i, j] * log_{X_i} Y_j."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return np.einsum("kn,knd->kd", np.asarray(coef, dtype=float), self.log(X[:, None, :], Y[None, :, :]))

    def random_unit_tangent(self, x, rng, size=None):
        x = np.asarray(x, dtype=float)
        shape = x.shape if size is None else (size,) + x.shape[-1:]
        u = self.project_tangent(np.broadcast_to(x, shape), rng.standard_normal(shape))
        return u / self.norm(x, u)[..., None]

    def to_ambient(self, x):
        return np.asarray(x, dtype=float)

    def tangent_to_ambient(self, x, v):
        return np.asarray(v, dtype=float)

    # -- sampling -------------------------------------------------------------

    def _radial_sample(self, radius, n, rng):
        return radius * rng.random(n) ** (1.0 / self.intrinsic_dim)

    def sample_disk(self, center, radius, n, seed):
        """n points of the closed geodesic disk about ``center``, deterministic in ``seed``."""
        center = np.asarray(center, dtype=float)
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        self.check_disk(center, radius)
        rng = np.random.default_rng(seed)
        u = self.random_unit_tangent(center, rng, size=n)
        rad = self._radial_sample(radius, n, rng)
        return self.exp(np.broadcast_to(center, (n, self.point_dim)), rad[:, None] * u, check=False)


class Sphere(Manifold):
    """Unit sphere S^k in R^{k+1} restricted to D_eps = {d(x, N) < pi/2 - eps}."""

    def __init__(self, dim=2, epsilon=0.1):
        if not 0 < epsilon < math.pi / 2:
            raise ValueError("sphere epsilon must lie in (0, pi/2)")
        self.k = int(dim)
        self.epsilon = float(epsilon)
        self.point_dim = self.tangent_dim = self.ambient_dim = self.k + 1
        self.intrinsic_dim = self.k
        self.north = np.zeros(self.k + 1)
        self.north[-1] = 1.0
        self.bound = math.pi / 2 - self.epsilon

    def __repr__(self):
        return f"Sphere(dim={self.k}, epsilon={self.epsilon})"

    def distance(self, x, y):
        diff = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        chord = np.sqrt(_sq_norm(diff))
        return 2.0 * np.arcsin(np.minimum(0.5 * chord, 1.0))

    def log(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        theta = self.distance(x, y)
        if np.any(theta >= math.pi - ANTIPODAL_GUARD):
            raise NearAntipodal("points are within the antipodal guard")
        diff = y - x
        w = diff - np.einsum("...i,...i->...", diff, x)[..., None] * x
        return kernels.theta_over_sin(theta)[..., None] * w

    def exp(self, x, v, check=True):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = np.sqrt(_sq_norm(v))[..., None]
        out = np.cos(nv) * x + np.sinc(nv / math.pi) * v
        moved = nv > 0
        out = np.where(moved, out / np.sqrt(_sq_norm(out))[..., None], out)
        if check:
            self.check(out, "exp result")
        return out

    def project_tangent(self, x, u):
        x = np.asarray(x, dtype=float)
        u = np.asarray(u, dtype=float)
        return u - np.einsum("...i,...i->...", u, x)[..., None] * x

    def retract(self, x, v):
        y = np.asarray(x, dtype=float) + np.asarray(v, dtype=float)
        return y / np.sqrt(_sq_norm(y))[..., None]

    def grad_dist_sq_closed_form(self, x, y):
        """2 f(theta) (cos(theta) x - y), the same quantity as grad_dist_sq."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        theta = self.distance(x, y)
        return 2.0 * kernels.theta_over_sin(theta)[..., None] * (np.cos(theta)[..., None] * x - y)

    def in_domain(self, x):
        x = np.asarray(x, dtype=float)
        unit = np.abs(np.sqrt(_sq_norm(x)) - 1.0) <= 1e-10
        return unit & (self.distance(x, self.north) < self.bound + DOMAIN_SLACK)

    def default_center(self):
        return self.north.copy()

    def check_disk(self, center, radius):
        self.check(center, "disk center")
        if self.distance(center, self.north) + radius >= self.bound:
            raise DomainViolation(f"disk of radius {radius} leaves D_eps", coords=center)

    def pairwise_distance(self, X, Y):
        return kernels.sphere_pairwise_angles(X, Y)

    def weighted_log_sum(self, X, Y, coef, dist=None):
        theta = self.pairwise_distance(X, Y) if dist is None else dist
        if theta.size and theta.max() >= math.pi - ANTIPODAL_GUARD:
            raise NearAntipodal("points are within the antipodal guard")
        return kernels.sphere_log_weighted_sum(X, Y, theta, coef)

    def _polar_sample(self, radius, n, rng):
        u = rng.random(n)
        if self.k == 1:
            return radius * u
        if self.k == 2:
            # area of a cap of angle t is proportional to sin^2(t/2)
            return 2.0 * np.arcsin(np.sqrt(u) * math.sin(radius / 2.0))
        t = np.linspace(0.0, radius, 4097)
        dens = np.sin(t) ** (self.k - 1)
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(t))])
        return np.interp(u * cdf[-1], cdf, t)

    def sample_disk(self, center, radius, n, seed):
        """Uniform samples (surface measure) of the geodesic cap about ``center``."""
        center = np.asarray(center, dtype=float)
        if radius < 0:
            raise ValueError("radius must be nonnegative")
        self.check_disk(center, radius)
        rng = np.random.default_rng(seed)
        u = self.random_unit_tangent(center, rng, size=n)
        theta = self._polar_sample(radius, n, rng)
        return self.exp(np.broadcast_to(center, (n, self.point_dim)), theta[:, None] * u, check=False)


class _Flat(Manifold):
    """Geometry of a flat chart: straight lines are geodesics."""

    def distance(self, x, y):
        diff = np.asarray(y, dtype=float) - np.asarray(x, dtype=float)
        return np.sqrt(_sq_norm(diff))

    def log(self, x, y):
        return np.asarray(y, dtype=float) - np.asarray(x, dtype=float)

    def exp(self, x, v, check=True):
        out = np.asarray(x, dtype=float) + np.asarray(v, dtype=float)
        if check:
            self.check(out, "exp result")
        return out


class Euclidean(_Flat):
    def __init__(self, dim=1):
        self.point_dim = self.tangent_dim = self.ambient_dim = self.intrinsic_dim = int(dim)

    def __repr__(self):
        return f"Euclidean(dim={self.point_dim})"

    def in_domain(self, x):
        return np.all(np.isfinite(np.asarray(x, dtype=float)), axis=-1)

    def default_center(self):
        return np.zeros(self.point_dim)

    def check_disk(self, center, radius):
        self.check(center, "disk center")


class CircleArc(_Flat):
    """Unit circle in the angle chart, restricted to the arc (0, pi - eps)."""

    has_chart = True

    def __init__(self, epsilon=0.1):
        if not 0 < epsilon < math.pi:
            raise ValueError("circle epsilon must lie in (0, pi)")
        self.epsilon = float(epsilon)
        self.point_dim = self.tangent_dim = self.intrinsic_dim = 1
        self.ambient_dim = 2
        self.upper = math.pi - self.epsilon

    def __repr__(self):
        return f"CircleArc(epsilon={self.epsilon})"

    def in_domain(self, x):
        a = np.asarray(x, dtype=float)[..., 0]
        return (a > -DOMAIN_SLACK) & (a < self.upper + DOMAIN_SLACK)

    def default_center(self):
        return np.array([self.upper / 2.0])

    def check_disk(self, center, radius):
        self.check(center, "disk center")
        a = float(np.asarray(center)[0])
        if a - radius <= 0.0 or a + radius >= self.upper:
            raise DomainViolation(f"arc of radius {radius} leaves the admissible arc", coords=center)

    def to_ambient(self, x):
        a = np.asarray(x, dtype=float)[..., 0]
        return np.stack([np.cos(a), np.sin(a)], axis=-1)

    def tangent_to_ambient(self, x, v):
        a = np.asarray(x, dtype=float)[..., 0]
        s = np.asarray(v, dtype=float)[..., 0]
        return np.stack([-np.sin(a) * s, np.cos(a) * s], axis=-1)


class CylinderBand(_Flat):
    """Cylinder S^1 x R in the (angle, height) chart, angle restricted to (0, pi - eps).

    Only the angle is constrained; the height is unbounded and its running
    extent is reported by the dynamics rather than enforced here.
    """

    has_chart = True

    def __init__(self, epsilon=0.1):
        if not 0 < epsilon < math.pi:
            raise ValueError("cylinder epsilon must lie in (0, pi)")
        self.epsilon = float(epsilon)
        self.point_dim = self.tangent_dim = self.intrinsic_dim = 2
        self.ambient_dim = 3
        self.upper = math.pi - self.epsilon

    def __repr__(self):
        return f"CylinderBand(epsilon={self.epsilon})"

    def in_domain(self, x):
        x = np.asarray(x, dtype=float)
        a = x[..., 0]
        return (a > -DOMAIN_SLACK) & (a < self.upper + DOMAIN_SLACK) & np.isfinite(x[..., 1])

    def default_center(self):
        return np.array([self.upper / 2.0, 0.0])

    def check_disk(self, center, radius):
        self.check(center, "disk center")
        a = float(np.asarray(center)[0])
        if a - radius <= 0.0 or a + radius >= self.upper:
            raise DomainViolation(f"disk of radius {radius} leaves the band", coords=center)

    def basis(self, x):
        """Orthonormal frame (e_x, e_z) at x in ambient coordinates."""
        a = np.asarray(x, dtype=float)[..., 0]
        zero = np.zeros_like(a)
        e_x = np.stack([-np.sin(a), np.cos(a), zero], axis=-1)
        e_z = np.stack([zero, zero, zero + 1.0], axis=-1)
        return e_x, e_z

    def to_ambient(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([np.cos(x[..., 0]), np.sin(x[..., 0]), x[..., 1]], axis=-1)

    def tangent_to_ambient(self, x, v):
        v = np.asarray(v, dtype=float)
        e_x, e_z = self.basis(x)
        return v[..., 0:1] * e_x + v[..., 1:2] * e_z

    def z_extent(self, X):
        return float(np.max(np.abs(np.asarray(X)[..., 1])))


class Product(Manifold):
    """Riemannian product M1 x M2 with d = sqrt(d1^2 + d2^2); everything else is componentwise."""

    def __init__(self, left, right):
        self.left = left
        self.right = right
        self.point_dim = left.point_dim + right.point_dim
        self.tangent_dim = left.tangent_dim + right.tangent_dim
        self.ambient_dim = left.ambient_dim + right.ambient_dim
        self.intrinsic_dim = left.intrinsic_dim + right.intrinsic_dim
        self.has_chart = left.has_chart or right.has_chart

    def __repr__(self):
        return f"Product({self.left!r}, {self.right!r})"

    def split(self, x):
        x = np.asarray(x, dtype=float)
        p = self.left.point_dim
        return x[..., :p], x[..., p:]

    def split_tangent(self, v):
        v = np.asarray(v, dtype=float)
        p = self.left.tangent_dim
        return v[..., :p], v[..., p:]

    def _cat(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        lead = np.broadcast_shapes(a.shape[:-1], b.shape[:-1])
        a = np.broadcast_to(a, lead + a.shape[-1:])
        b = np.broadcast_to(b, lead + b.shape[-1:])
        return np.concatenate([a, b], axis=-1)

    def distance(self, x, y):
        x1, x2 = self.split(x)
        y1, y2 = self.split(y)
        return np.sqrt(self.left.distance(x1, y1) ** 2 + self.right.distance(x2, y2) ** 2)

    def log(self, x, y):
        x1, x2 = self.split(x)
        y1, y2 = self.split(y)
        return self._cat(self.left.log(x1, y1), self.right.log(x2, y2))

    def exp(self, x, v, check=True):
        x1, x2 = self.split(x)
        v1, v2 = self.split_tangent(v)
        out = self._cat(self.left.exp(x1, v1, check=False), self.right.exp(x2, v2, check=False))
        if check:
            self.check(out, "exp result")
        return out

    def project_tangent(self, x, u):
        x1, x2 = self.split(x)
        u1, u2 = self.split_tangent(u)
        return self._cat(self.left.project_tangent(x1, u1), self.right.project_tangent(x2, u2))

    def retract(self, x, v):
        x1, x2 = self.split(x)
        v1, v2 = self.split_tangent(v)
        return self._cat(self.left.retract(x1, v1), self.right.retract(x2, v2))

    def in_domain(self, x):
        x1, x2 = self.split(x)
        return self.left.in_domain(x1) & self.right.in_domain(x2)

    def default_center(self):
        return np.concatenate([self.left.default_center(), self.right.default_center()])

    def check_disk(self, center, radius):
        c1, c2 = self.split(center)
        self.left.check_disk(c1, radius)
        self.right.check_disk(c2, radius)

    def pairwise_distance(self, X, Y):
        X1, X2 = self.split(X)
        Y1, Y2 = self.split(Y)
        return np.sqrt(self.left.pairwise_distance(X1, Y1) ** 2 + self.right.pairwise_distance(X2, Y2) ** 2)

    def weighted_log_sum(self, X, Y, coef, dist=None):
        # component sums use the shared coefficients, so a product run
        # reproduces its factor runs whenever coef does not depend on d
        X1, X2 = self.split(X)
        Y1, Y2 = self.split(Y)
        return np.concatenate(
            [self.left.weighted_log_sum(X1, Y1, coef), self.right.weighted_log_sum(X2, Y2, coef)], axis=-1
        )

    def random_unit_tangent(self, x, rng, size=None):
        x = np.asarray(x, dtype=float)
        shape = x.shape if size is None else (size,) + x.shape[-1:]
        xb = np.broadcast_to(x, shape)
        x1, x2 = self.split(xb)
        g1 = self.left.project_tangent(x1, rng.standard_normal(x1.shape[:-1] + (self.left.tangent_dim,)))
        g2 = self.right.project_tangent(x2, rng.standard_normal(x2.shape[:-1] + (self.right.tangent_dim,)))
        u = np.concatenate([g1, g2], axis=-1)
        return u / self.norm(xb, u)[..., None]

    def to_ambient(self, x):
        x1, x2 = self.split(x)
        return self._cat(self.left.to_ambient(x1), self.right.to_ambient(x2))

    def tangent_to_ambient(self, x, v):
        x1, x2 = self.split(x)
        v1, v2 = self.split_tangent(v)
        return self._cat(self.left.tangent_to_ambient(x1, v1), self.right.tangent_to_ambient(x2, v2))


def torus(epsilon=0.1):
    """S^1 x S^1, each factor restricted to an open arc."""
    return Product(CircleArc(epsilon), CircleArc(epsilon))


def circle_line(epsilon=0.1):
    """S^1 x R built as a product; same geometry as CylinderBand."""
    return Product(CircleArc(epsilon), Euclidean(1))
