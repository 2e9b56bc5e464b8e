"""Kernel backend selection.

Two interchangeable implementations exist: ``cyimpl`` (compiled Cython,
built at install time when a C compiler is available) and ``pyimpl``
(pure numpy, always available, also the semantic reference).  The active
backend is chosen at import time: the compiled module when it imported
cleanly, otherwise the numpy fallback.  Set the environment variable
``BRANCHRANGE_BACKEND`` to ``cython`` or ``numpy`` to force one.
"""

from __future__ import annotations

import os

from . import pyimpl

COST_INVALID = pyimpl.COST_INVALID
COST_MAX_VALID = pyimpl.COST_MAX_VALID

try:
    from . import cyimpl as _cyimpl
except ImportError:
    _cyimpl = None

_FORCED = os.environ.get("BRANCHRANGE_BACKEND", "").strip().lower()
if _FORCED == "numpy":
    _active = pyimpl
elif _FORCED == "cython":
    if _cyimpl is None:
        raise ImportError(
            "BRANCHRANGE_BACKEND=cython but the compiled kernel module is "
            "not available; reinstall with a C compiler present"
        )
    _active = _cyimpl
else:
    _active = _cyimpl if _cyimpl is not None else pyimpl


def backend_name() -> str:
    """Name of the active backend: 'cython' or 'numpy'."""
    return "cython" if _active is not None and _active is _cyimpl else "numpy"


def available_backends() -> dict:
    """Mapping of backend name -> implementation module (importable ones)."""
    out = {"numpy": pyimpl}
    if _cyimpl is not None:
        out["cython"] = _cyimpl
    return out


def set_backend(name: str) -> None:
    """Switch the active backend at runtime (mainly for tests/benchmarks)."""
    global _active
    backends = available_backends()
    if name not in backends:
        raise ValueError(f"unknown or unavailable backend {name!r}")
    _active = backends[name]


def census_transform(img, radius):
    return _active.census_transform(img, radius)


def hamming_cost_volume(census_left, census_right, d_max):
    return _active.hamming_cost_volume(census_left, census_right, d_max)


def sad_cost_volume(left, right, d_max, radius):
    return _active.sad_cost_volume(left, right, d_max, radius)


def sgm_aggregate(cost, p1, p2, paths):
    return _active.sgm_aggregate(cost, p1, p2, paths)


def median3x3(disp):
    return _active.median3x3(disp)


def gauss_seidel(u0, data, conf, w_right, w_down, lam, sweeps):
    return _active.gauss_seidel(u0, data, conf, w_right, w_down, lam, sweeps)
