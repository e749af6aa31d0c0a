"""Batch projection kernels, compiled when available.

The Cython extension ``exproj._kernels`` is used if it imports; otherwise the
numpy implementations in :mod:`exproj.projections` are used. Setting
``EXPROJ_PURE_PYTHON=1`` forces the fallback.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import projections as _python

_compiled: ModuleType | None
try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS: dict[str, ModuleType] = {"python": _python}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        name = "python" if os.environ.get("EXPROJ_PURE_PYTHON") or _compiled is None else "compiled"
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable kernel backend {name!r}; have {sorted(BACKENDS)}") from None


_active = get_backend()
BACKEND = "compiled" if _active is _compiled else "python"

surface_batch = _active.surface_batch
cone_batch = _active.cone_batch
band_batch = _active.band_batch
nearest_on_curve_batch = _active.nearest_on_curve_batch
