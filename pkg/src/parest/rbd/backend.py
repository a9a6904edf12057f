"""Selects the compiled kernels when available, else the pure-Python ones.

Set ``PAREST_PURE=1`` to force the pure-Python kernels.
"""

import logging
import os

from . import _kernels_py

log = logging.getLogger(__name__)

kernels = _kernels_py
NAME = "python"

if os.environ.get("PAREST_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError as exc:  # pragma: no cover - depends on build
        log.debug("compiled kernels unavailable (%s), using pure Python", exc)
    else:
        kernels = _compiled
        NAME = "cython"


def get_kernels(name=None):
    """Return a kernel module by name (``"cython"``, ``"python"``) or the default."""
    if name is None:
        return kernels
    if name == "python":
        return _kernels_py
    if name == "cython":
        from . import _kernels
        return _kernels
    raise ValueError(f"unknown kernel backend {name!r}")
