"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
numpy ``_pykernels`` module. ``TFCLEAD_BACKEND=python`` forces the fallback.
"""
import os
from types import ModuleType

from . import _pykernels

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

BACKENDS: dict[str, ModuleType] = {"python": _pykernels}
if _ckernels is not None:
    BACKENDS["cython"] = _ckernels


def get_backend(name: str | None = None) -> ModuleType:
    if name is None:
        name = os.environ.get("TFCLEAD_BACKEND") or ("cython" if "cython" in BACKENDS else "python")
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} unavailable; have {sorted(BACKENDS)}") from None


def backend_name(module: ModuleType) -> str:
    return next(k for k, v in BACKENDS.items() if v is module)


DEFAULT = get_backend()
