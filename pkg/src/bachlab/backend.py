"""Kernel backend selection.

The hot jet kernels exist twice: numba-jitted (``_kernels_nb``) and pure
numpy (``_kernels_np``).  ``BACHLAB_BACKEND`` picks one:

* ``auto`` (default) -- numba if importable, else numpy;
* ``numba``          -- require the jitted kernels;
* ``numpy``          -- force the fallback (useful for debugging and for the
                        backend-equivalence tests / benchmark).
"""

from __future__ import annotations

import os

_CHOICE = os.environ.get("BACHLAB_BACKEND", "auto").strip().lower()

if _CHOICE not in ("auto", "numba", "numpy"):
    raise RuntimeError(
        f"BACHLAB_BACKEND must be one of auto|numba|numpy, got {_CHOICE!r}"
    )

if _CHOICE == "numpy":
    from . import _kernels_np as kernels
elif _CHOICE == "numba":
    from . import _kernels_nb as kernels
else:
    try:
        from . import _kernels_nb as kernels
    except ImportError:  # pragma: no cover
        from . import _kernels_np as kernels


def backend_name() -> str:
    return kernels.NAME


def get_kernels(name: str | None = None):
    """Return a kernel module by name (None = the active one)."""
    if name is None:
        return kernels
    if name == "numpy":
        from . import _kernels_np

        return _kernels_np
    if name == "numba":
        from . import _kernels_nb

        return _kernels_nb
    raise ValueError(f"unknown backend {name!r}")
