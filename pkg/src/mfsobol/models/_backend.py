"""Kernel backend selection.

The compiled extension is used when it imports; ``MFSOBOL_BACKEND=python``
forces the numpy reference kernels.
"""

import os

from . import _pykernels

BACKEND = "python"
kernels = _pykernels

if os.environ.get("MFSOBOL_BACKEND", "").lower() != "python":
    try:
        from . import _ckernels as _ck
    except ImportError:  # extension not built
        _ck = None
    if _ck is not None:
        kernels = _ck
        BACKEND = "c"


def get_kernels(name: str | None = None):
    """Kernel module by name (``"c"`` or ``"python"``); ``None`` gives the active one."""
    if name is None:
        return kernels
    if name == "python":
        return _pykernels
    if name == "c":
        from . import _ckernels

        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
