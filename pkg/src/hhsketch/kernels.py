"""Batch kernel dispatch.

The compiled ``_ckernels`` extension is used when it imports; otherwise, or
when ``HHSKETCH_PURE_PYTHON=1`` is set, the pure-Python ``_pykernels``
fallback runs the same computations through the reference classes.
"""

from __future__ import annotations

import os

from . import _pykernels

SKETCH_KINDS = {"count-min": 0, "gated": 1}
WINDOW_KINDS = {"none": 0, "flush": 1, "ring": 2, "sequential": 3, "seqflush": 4}

python_backend = _pykernels

if os.environ.get("HHSKETCH_PURE_PYTHON") == "1":
    compiled_backend = None
else:
    try:
        from . import _ckernels as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

backend = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"


def get_backend(name: str | None = None):
    """``"cython"``, ``"python"`` or ``None`` for the import-time default."""
    if name is None:
        return backend
    if name == "python":
        return python_backend
    if name == "cython":
        if compiled_backend is None:
            raise ImportError("compiled kernels are not available; reinstall to build them")
        return compiled_backend
    raise ValueError(f"unknown backend {name!r}")
