"""Backend selection: compiled stepper kernel with pure-Python fallback.

Set FLOQUETLAB_PURE_PYTHON=1 to force the fallback (used by the parity tests
and the benchmark).
"""

from __future__ import annotations

import os

from . import stepper as _py

_FORCE_PURE = os.environ.get("FLOQUETLAB_PURE_PYTHON", "") == "1"

try:
    from . import _core as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None

STATUS_OK = _py.STATUS_OK
STATUS_STEP_UNDERFLOW = _py.STATUS_STEP_UNDERFLOW
STATUS_OVERFLOW = _py.STATUS_OVERFLOW


def active_backend() -> str:
    return "pure-python" if (_FORCE_PURE or _compiled is None) else "compiled"


def integrate(harm_m, harm_c, omega0, lam, Y0, x0, targets, rtol, atol, hmax, step_log=None):
    if step_log is not None or _FORCE_PURE or _compiled is None:
        return _py.integrate(
            harm_m, harm_c, omega0, lam, Y0, x0, targets, rtol, atol, hmax, step_log
        )
    return _compiled.integrate(harm_m, harm_c, omega0, lam, Y0, x0, targets, rtol, atol, hmax)


def integrate_pure(harm_m, harm_c, omega0, lam, Y0, x0, targets, rtol, atol, hmax, step_log=None):
    return _py.integrate(harm_m, harm_c, omega0, lam, Y0, x0, targets, rtol, atol, hmax, step_log)


def integrate_compiled(harm_m, harm_c, omega0, lam, Y0, x0, targets, rtol, atol, hmax):
    if _compiled is None:
        raise RuntimeError("compiled kernel not available")
    return _compiled.integrate(harm_m, harm_c, omega0, lam, Y0, x0, targets, rtol, atol, hmax)


def have_compiled() -> bool:
    return _compiled is not None
