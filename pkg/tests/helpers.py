"""Shared test helpers."""

import math

import numpy as np

from geoswarm.manifolds import CylinderBand, Euclidean, Sphere, circle_line, torus

ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def random_points(M, n, rng, radius=None):
    """n admissible points of M, drawn from a disk that fits in the domain."""
    if isinstance(M, Sphere):
        r = M.bound * 0.95 if radius is None else radius
        return M.sample_disk(M.north, r, n, rng.integers(2**63))
    center = M.default_center()
    if radius is None:
        radius = 0.9 * min(_room(M), 2.0)
    return M.sample_disk(center, radius, n, rng.integers(2**63))


def _room(M):
    if isinstance(M, Sphere):
        return M.bound * 0.95
    if isinstance(M, CylinderBand):
        return M.upper / 2
    if hasattr(M, "left"):
        return min(_room(M.left), _room(M.right))
    if hasattr(M, "upper"):
        return M.upper / 2
    return math.inf


MANIFOLDS = {
    "sphere2": lambda: Sphere(2, 0.1),
    "sphere3": lambda: Sphere(3, 0.2),
    "cylinder": lambda: CylinderBand(0.1),
    "euclidean2": lambda: Euclidean(2),
    "torus": lambda: torus(0.1),
    "circle_line": lambda: circle_line(0.1),
}
