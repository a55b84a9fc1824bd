"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise, or when
``GEOSWARM_PURE_PYTHON=1`` is set, the numpy implementations are used.
Both expose the same functions with identical semantics.
"""

import os

from . import _pykernels

theta_over_sin = _pykernels.theta_over_sin

_impl = _pykernels
BACKEND = "python"
if os.environ.get("GEOSWARM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

sphere_pairwise_angles = _impl.sphere_pairwise_angles
sphere_log_weighted_sum = _impl.sphere_log_weighted_sum
network_simplex = _impl.network_simplex
linear_assignment = _impl.linear_assignment


def get_backend(name=None):
    """Return the kernel module for ``name`` ("python", "cython") or the active one."""
    if name is None:
        return _impl
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _kernels

        return _kernels
    raise ValueError(f"unknown backend {name!r}")
