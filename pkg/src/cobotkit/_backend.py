"""Kernel backend selection: compiled extension when available, numpy otherwise.

Set COBOTKIT_PURE_PYTHON=1 to force the fallback (used by the benchmark and
the backend-equivalence tests).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("COBOTKIT_PURE_PYTHON"):
    kernels = _kernels_py
else:
    try:
        from . import _speedups as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

BACKEND = kernels.BACKEND_NAME


def available_backends():
    """All importable kernel backends, compiled first."""
    out = []
    try:
        from . import _speedups

        out.append(_speedups)
    except ImportError:
        pass
    out.append(_kernels_py)
    return out
