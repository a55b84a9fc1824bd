"""Interaction potentials K(x, y) = g(d(x, y)^2) and their derived quantities."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import HypothesisUnmet, NonFiniteValue
from .kernels import theta_over_sin


class Potential:
    """Profile g with derivative dg, both acting elementwise on s = d^2."""

    name = "potential"
    # g' continuously differentiable on compact intervals (needed by the
    # continuum consensus argument); recorded, not verified numerically
    c1_derivative = True

    def g(self, s):
        raise NotImplementedError

    def dg(self, s):
        raise NotImplementedError

    def params(self):
        return {"profile": self.name}

    def is_attractive(self, epsilon, grid=10_000):
        s = np.linspace(0.0, (math.pi - 2 * epsilon) ** 2, grid)
        return bool(np.all(self.dg(s) >= 0.0))

    def __repr__(self):
        args = ", ".join(f"{k}={v}" for k, v in self.params().items() if k != "profile")
        return f"{type(self).__name__}({args})"


class HalfQuadratic(Potential):
    name = "half_quadratic"

    def g(self, s):
        return 0.5 * np.asarray(s, dtype=float)

    def dg(self, s):
        return np.full(np.shape(s), 0.5)


class PowerLaw(Potential):
    """g(s) = c s^q with q >= 1."""

    name = "power_law"

    def __init__(self, q=2.0, c=1.0):
        if q < 1:
            raise ValueError("power-law exponent must be >= 1")
        if c <= 0:
            raise ValueError("power-law scale must be positive")
        self.q = float(q)
        self.c = float(c)
        self.c1_derivative = self.q == 1 or self.q >= 2

    def g(self, s):
        return self.c * np.asarray(s, dtype=float) ** self.q

    def dg(self, s):
        s = np.asarray(s, dtype=float)
        if self.q == 1:
            return np.full(s.shape, self.c)
        return self.c * self.q * s ** (self.q - 1.0)

    def params(self):
        return {"profile": self.name, "q": self.q, "c": self.c}


class Lohe(Potential):
    """g(s) = 2 sin^2(sqrt(s)/2), so K = 1 - cos d."""

    name = "lohe"

    def g(self, s):
        return 2.0 * np.sin(0.5 * np.sqrt(np.asarray(s, dtype=float))) ** 2

    def dg(self, s):
        # sin(sqrt s) / (2 sqrt s), smooth through s = 0
        return 0.5 * np.sinc(np.sqrt(np.asarray(s, dtype=float)) / math.pi)


class Custom(Potential):
    """User-supplied pair (g, dg); no differentiation is attempted."""

    def __init__(self, g, dg, name="custom", c1_derivative=False, spec=None):
        self._g = g
        self._dg = dg
        self.name = name
        self.c1_derivative = c1_derivative
        self.spec = spec

    def params(self):
        return dict(self.spec) if self.spec else {"profile": self.name}

    def g(self, s):
        return np.asarray(self._g(np.asarray(s, dtype=float)), dtype=float) * np.ones(np.shape(s))

    def dg(self, s):
        return np.asarray(self._dg(np.asarray(s, dtype=float)), dtype=float) * np.ones(np.shape(s))


_SAFE_NAMES = {"np": np, "pi": math.pi}


def _expression(text):
    code = compile(text, "<potential>", "eval")
    for name in code.co_names:
        if name not in ("np", "s", "pi") and not hasattr(np, name):
            raise ValueError(f"name {name!r} not allowed in potential expression")
    return lambda s: eval(code, {"__builtins__": {}}, {**_SAFE_NAMES, "s": s})  # noqa: S307


def from_spec(spec):
    """Build a potential from a config mapping such as {"profile": "power_law", "q": 2}."""
    profile = spec.get("profile")
    if profile == "half_quadratic":
        return HalfQuadratic()
    if profile == "power_law":
        return PowerLaw(spec.get("q", 2.0), spec.get("c", 1.0))
    if profile == "lohe":
        return Lohe()
    if profile == "custom":
        if "g" not in spec or "dg" not in spec:
            raise ValueError("custom profile needs expressions 'g' and 'dg' in the variable s")
        return Custom(_expression(spec["g"]), _expression(spec["dg"]), name=spec.get("name", "custom"),
                      spec=dict(spec))
    raise ValueError(f"unknown potential profile {profile!r}")


# -- evaluations on a manifold ----------------------------------------------


def k_eval(P, M, x, y):
    """K(x, y) = g(d(x, y)^2)."""
    return P.g(M.distance(x, y) ** 2)


def grad_k(P, M, x, y):
    """Gradient of K(., y) at x: -2 g'(d^2) log_x y."""
    d = M.distance(x, y)
    return -2.0 * P.dg(d * d)[..., None] * M.log(x, y)


def g_cap_eval(P, M, x, y):
    """G(x, y) = 2 g'(d^2) d / sin d on the sphere, equal to 2 g'(0) on the diagonal."""
    d = M.distance(x, y)
    return 2.0 * P.dg(d * d) * theta_over_sin(d)


def g_cap_of_distance(P, d):
    d = np.asarray(d, dtype=float)
    return 2.0 * P.dg(d * d) * theta_over_sin(d)


@dataclass(frozen=True)
class PotentialConstants:
    epsilon: float
    C_g_prime: float
    L_g_prime: float
    grid: int
    resolution: float


def constants(P, epsilon, grid=100_000):
    """Sup of |g'| and max slope of g' on [0, (pi - 2 eps)^2], by uniform grid sampling."""
    if grid < 1000:
        raise ValueError("grid must have at least 1000 samples")
    upper = (math.pi - 2.0 * epsilon) ** 2
    s = np.linspace(0.0, upper, grid)
    d = P.dg(s)
    if not np.all(np.isfinite(d)):
        raise NonFiniteValue(f"g' is not finite on [0, {upper}]")
    step = s[1] - s[0]
    slope = np.abs(np.diff(d)) / step
    return PotentialConstants(
        epsilon=float(epsilon),
        C_g_prime=float(np.max(np.abs(d))),
        L_g_prime=float(np.max(slope)) if slope.size else 0.0,
        grid=int(grid),
        resolution=float(step),
    )


def g_hypothesis_report(P, epsilon, C, grid=100_000):
    """Grid check of G >= C and of G nondecreasing in the distance on [0, pi - 2 eps].

    Also reports the sufficient condition on g itself (g' >= C/2 and g'
    nondecreasing). Values are worst margins; negative means violated.
    """
    d = np.linspace(0.0, math.pi - 2.0 * epsilon, grid)
    G = g_cap_of_distance(P, d)
    dg = P.dg(d * d)
    tol = 1e-12 * max(1.0, float(np.max(np.abs(G))))
    return {
        "lower_bound_margin": float(np.min(G) - C),
        "monotone_margin": float(np.min(np.diff(G))) if G.size > 1 else 0.0,
        "lower_bound_ok": bool(np.min(G) >= C - tol),
        "monotone_ok": bool(np.all(np.diff(G) >= -tol)),
        "sufficient_ok": bool(np.all(dg >= C / 2 - 1e-15) and np.all(np.diff(dg) >= -1e-15)),
    }


def require_lower_bound(P, epsilon, C, grid=100_000):
    rep = g_hypothesis_report(P, epsilon, C, grid)
    if not rep["lower_bound_ok"]:
        raise HypothesisUnmet(f"G >= {C} fails on the grid (margin {rep['lower_bound_margin']:.3e})")
    return rep
