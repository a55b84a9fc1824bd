"""Intrinsic aggregation dynamics on Riemannian manifolds."""

from .analysis import (
    consensus_report,
    constants_report,
    diameter,
    discrete_energy,
    dissipation,
    weighted_center_field,
)
from .dynamics import (
    DiskSample,
    EmpiricalMeasure,
    SimConfig,
    TrajectoryRecord,
    simulate,
    simulate_product_decoupled,
    step,
    velocity,
)
from .errors import DomainViolation, GeoswarmError
from .kernels import BACKEND
from .manifolds import CircleArc, CylinderBand, Euclidean, Product, Sphere, circle_line, torus
from .potentials import HalfQuadratic, Lohe, PowerLaw, grad_k, k_eval
from .transport import w1, w1_bruteforce

__version__ = "0.1.0"
