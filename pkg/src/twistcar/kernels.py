"""Backend selection for the flow kernel.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``TWISTCAR_BACKEND=python`` is set, the pure-Python
fallback is used.  ``BACKEND`` names the active choice.
"""
import os

from . import _pykernels

BACKEND = "python"
flow = _pykernels.flow

if os.environ.get("TWISTCAR_BACKEND", "").lower() != "python":
    try:
        from . import _kernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        flow = _kernels.flow


def get_flow(backend=None):
    """Return the ``flow`` function of a named backend (default: active)."""
    if backend is None:
        return flow
    if backend == "python":
        return _pykernels.flow
    if backend == "cython":
        from . import _kernels
        return _kernels.flow
    raise ValueError(f"unknown backend {backend!r}")


def available_backends():
    """Names of the backends that can be loaded, compiled first."""
    names = []
    try:
        from . import _kernels  # noqa: F401
        names.append("cython")
    except ImportError:
        pass
    names.append("python")
    return names
