"""Hot-kernel backends: compiled extension with a numpy fallback.

The compiled core (Cython) is preferred when its import succeeds; otherwise
the vectorized numpy backend takes over with identical semantics. Set
RIESZ_BACKEND=python or RIESZ_BACKEND=compiled to force a choice (forcing
the missing extension raises). RIESZ_THREADS caps internal parallelism
(0 or unset means automatic); the shipped kernels are single-threaded, so
any cap is honored trivially.
"""

from __future__ import annotations

import os

from . import numpy_backend

_forced = os.environ.get("RIESZ_BACKEND", "").strip().lower()
if _forced not in ("", "python", "compiled"):
    raise RuntimeError(
        f"RIESZ_BACKEND must be 'python' or 'compiled', got {_forced!r}"
    )

if _forced == "python":
    _impl = numpy_backend
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _forced == "compiled":
            raise RuntimeError(
                "RIESZ_BACKEND=compiled but the compiled extension is not available"
            )
        _impl = numpy_backend
        BACKEND = "python"


def get_backend(name=None):
    """Return a backend module by name; None gives the selected default."""
    if name is None:
        return _impl
    if name == "python":
        return numpy_backend
    if name == "compiled":
        from . import _core  # raises ImportError when not built

        return _core
    raise ValueError(f"unknown backend {name!r}")


def available_backends():
    names = ["python"]
    try:
        from . import _core  # noqa: F401

        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def thread_cap() -> int:
    """Parallelism cap from RIESZ_THREADS; 0 or unset means automatic."""
    raw = os.environ.get("RIESZ_THREADS", "0").strip() or "0"
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"RIESZ_THREADS must be an integer, got {raw!r}") from exc
    if value < 0:
        raise ValueError("RIESZ_THREADS must be >= 0")
    if value == 0:
        return os.cpu_count() or 1
    return value
