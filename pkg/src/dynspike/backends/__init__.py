"""Kernel backend selection.

The hot inner loops (batched RK4 trajectory integration and the Lyapunov
QR accumulation) exist twice: a Cython extension and a NumPy fallback with
identical semantics. The compiled core is picked automatically when the
extension built; ``DYNSPIKE_BACKEND=numpy|compiled`` forces a choice.
"""

from __future__ import annotations

import os

from . import numpy_backend

_FORCED = os.environ.get("DYNSPIKE_BACKEND", "").strip().lower()

_compiled = None
if _FORCED != "numpy":
    try:
        from . import _ckernels as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None
        if _FORCED == "compiled":
            raise ImportError(
                "DYNSPIKE_BACKEND=compiled but the extension is not built; "
                "run `pip install -e . --no-build-isolation`"
            )

_impl = _compiled if _compiled is not None else numpy_backend


def backend_name() -> str:
    return "compiled" if _impl is not numpy_backend else "numpy"


def get_backend(name: str | None = None):
    """Return a backend module by name (None = the active one)."""
    if name in (None, backend_name()):
        return _impl
    if name == "numpy":
        return numpy_backend
    if name == "compiled":
        if _compiled is None:
            raise ImportError("compiled backend unavailable")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")


def integrate_states(sys_id, params, s0, h, steps, guard):
    return _impl.integrate_states(sys_id, params, s0, h, steps, guard)


def traj_batch(sys_id, params, s0, h, substeps, n_samples, include_t0, guard):
    return _impl.traj_batch(
        sys_id, params, s0, h, substeps, n_samples, include_t0, guard
    )


def lyap_core(sys_id, params, s0, h, steps, qr_interval, transient_steps, tol, guard):
    return _impl.lyap_core(
        sys_id, params, s0, h, steps, qr_interval, transient_steps, tol, guard
    )
