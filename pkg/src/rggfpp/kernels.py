"""Backend selection for the hot loops.

The compiled extension is preferred; set ``RGGFPP_PURE_PYTHON=1`` to force
the numpy fallback (useful for benchmarking and for cross-checking).
"""

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("RGGFPP_PURE_PYTHON", "0") != "1":
    try:
        from . import _ckernels as _impl  # noqa: F811

        BACKEND = "cython"
    except ImportError:  # pragma: no cover - depends on the build
        _impl = _pykernels

grid_pairs = _impl.grid_pairs
dijkstra = _impl.dijkstra
count_saw = _impl.count_saw
grid_components = _impl.grid_components


def backend(name):
    """Return the kernel module named ``"cython"`` or ``"python"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
