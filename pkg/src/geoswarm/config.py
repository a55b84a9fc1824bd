"""JSON run configuration: parsing, validation and object construction.

A config is one JSON document with the sections ``manifold``, ``potential``,
``initial``, ``integrator`` and ``experiment``. Errors carry the offending
field and, when it can be located in the text, its line number.
"""

import hashlib
import json
import math
import re

import numpy as np

from . import potentials
from .dynamics import SCHEMES, DiskSample, EmpiricalMeasure, SimConfig
from .errors import ConfigError
from .manifolds import CircleArc, CylinderBand, Euclidean, Product, Sphere

SECTIONS = ("manifold", "potential", "initial", "integrator", "experiment")


def git_hash(text):
    """Git blob hash of the config text (stable across platforms for identical bytes)."""
    data = text.encode("utf-8")
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


class Config:
    def __init__(self, raw, text=""):
        self.raw = raw
        self.text = text

    @classmethod
    def from_text(cls, text):
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(exc.msg, line=exc.lineno) from None
        if not isinstance(raw, dict):
            raise ConfigError("top level must be a JSON object", line=1)
        for key in raw:
            if key not in SECTIONS:
                raise ConfigError("unknown section", field=key, line=_line_of(text, key))
        return cls(raw, text)

    @classmethod
    def from_file(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    @property
    def hash(self):
        return git_hash(self.text)

    def error(self, message, field):
        return ConfigError(message, field=field, line=_line_of(self.text, field.split(".")[-1]))

    def section(self, name, required=True):
        sec = self.raw.get(name)
        if sec is None:
            if required:
                raise ConfigError("missing section", field=name)
            return {}
        if not isinstance(sec, dict):
            raise self.error("section must be an object", name)
        return sec

    def number(self, sec, name, key, default=None, positive=False, integer=False):
        val = sec.get(key, default)
        field = f"{name}.{key}"
        if val is None:
            raise self.error("required value missing", field)
        if isinstance(val, bool) or not isinstance(val, (int, float)):
            raise self.error("must be a number", field)
        if integer and int(val) != val:
            raise self.error("must be an integer", field)
        if not math.isfinite(val):
            raise self.error("must be finite", field)
        if positive and val <= 0:
            raise self.error("must be positive", field)
        return int(val) if integer else float(val)

    # -- builders ---------------------------------------------------------------

    def manifold(self, spec=None, name="manifold"):
        spec = self.section("manifold") if spec is None else spec
        kind = spec.get("type")
        if kind == "sphere":
            eps = self.number(spec, name, "epsilon")
            if not 0 < eps < math.pi / 2:
                raise self.error("sphere epsilon must lie in (0, pi/2)", f"{name}.epsilon")
            return Sphere(self.number(spec, name, "dim", 2, positive=True, integer=True), eps)
        if kind in ("cylinder", "circle"):
            eps = self.number(spec, name, "epsilon")
            if not 0 < eps < math.pi:
                raise self.error("epsilon must lie in (0, pi)", f"{name}.epsilon")
            return CylinderBand(eps) if kind == "cylinder" else CircleArc(eps)
        if kind == "euclidean":
            return Euclidean(self.number(spec, name, "dim", 1, positive=True, integer=True))
        if kind == "product":
            for side in ("left", "right"):
                if not isinstance(spec.get(side), dict):
                    raise self.error("product needs object entries 'left' and 'right'", f"{name}.{side}")
            return Product(self.manifold(spec["left"], f"{name}.left"), self.manifold(spec["right"], f"{name}.right"))
        raise self.error(f"unknown manifold type {kind!r}", f"{name}.type")

    def potential(self, spec=None, name="potential"):
        spec = self.section("potential") if spec is None else spec
        try:
            return potentials.from_spec(spec)
        except (ValueError, SyntaxError) as exc:
            raise self.error(str(exc), f"{name}.profile") from None

    def initial(self, M):
        spec = self.section("initial")
        kind = spec.get("type", "disk")
        masses = spec.get("masses")
        if masses is not None:
            masses = np.asarray(masses, dtype=float)
            if np.any(masses <= 0):
                raise self.error("masses must be positive", "initial.masses")
            if abs(masses.sum() - 1.0) > 1e-12:
                raise self.error(f"masses sum to {masses.sum()!r}, not 1 (tolerance 1e-12)", "initial.masses")
        if kind == "points":
            pts = np.asarray(spec.get("points"), dtype=float)
            if pts.ndim != 2 or pts.shape[1] != M.point_dim:
                raise self.error(f"points must be a list of {M.point_dim}-vectors", "initial.points")
            if masses is not None and masses.shape != (pts.shape[0],):
                raise self.error("one mass per point required", "initial.masses")
            inside = np.atleast_1d(M.in_domain(pts))
            if not np.all(inside):
                raise self.error(f"point {int(np.flatnonzero(~inside)[0])} is outside the domain", "initial.points")
            return EmpiricalMeasure(pts, masses)
        if kind == "disk":
            radius = self.number(spec, "initial", "radius")
            n = self.number(spec, "initial", "n", positive=True, integer=True)
            center = spec.get("center")
            center = M.default_center() if center is None else np.asarray(center, dtype=float)
            if center.shape != (M.point_dim,):
                raise self.error(f"center must have {M.point_dim} coordinates", "initial.center")
            if radius < 0:
                raise self.error("radius must be nonnegative", "initial.radius")
            self.check_disk(M, center, radius, "initial.radius")
            if masses is not None and masses.shape != (n,):
                raise self.error("one mass per point required", "initial.masses")
            return DiskSample(radius=radius, n=n, center=center, masses=masses)
        raise self.error(f"unknown initial type {kind!r}", "initial.type")

    def check_disk(self, M, center, radius, field):
        from .errors import DomainViolation

        if isinstance(M, Sphere) and radius >= M.bound:
            raise self.error(f"disk radius {radius} must be below pi/2 - epsilon = {M.bound}", field)
        try:
            M.check_disk(center, radius)
        except DomainViolation as exc:
            raise self.error(str(exc), field) from None

    def sim_config(self, seed=None):
        M = self.manifold()
        P = self.potential()
        init = self.initial(M)
        integ = self.section("integrator", required=False)
        exp = self.section("experiment", required=False)
        scheme = integ.get("scheme", "geodesic_euler")
        if scheme not in SCHEMES:
            raise self.error(f"scheme must be one of {SCHEMES}", "integrator.scheme")
        max_z = exp.get("max_abs_z")
        t_end = self.number(integ, "integrator", "t_end", 10.0)
        if t_end < 0:
            raise self.error("t_end must be nonnegative", "integrator.t_end")
        if seed is None:
            seed = self.number(exp, "experiment", "seed", 0, integer=True)
        return SimConfig(
            manifold=M,
            potential=P,
            initial=init,
            h=self.number(integ, "integrator", "h", 1e-2, positive=True),
            t_end=t_end,
            scheme=scheme,
            record_every=self.number(integ, "integrator", "record_every", 1, positive=True, integer=True),
            seed=int(seed),
            max_abs_z=None if max_z is None else self.number(exp, "experiment", "max_abs_z", positive=True),
        )


def _line_of(text, key):
    m = re.search(r'"%s"\s*:' % re.escape(key), text)
    if not m:
        return None
    return text.count("\n", 0, m.start()) + 1
