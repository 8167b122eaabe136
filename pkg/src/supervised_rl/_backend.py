"""Select the episode kernel: compiled when available, pure Python otherwise.

Set ``SUPERVISED_RL_BACKEND=python`` to force the fallback.
"""
import os

from . import _qkernel_py

KERNELS = {"python": _qkernel_py.run_episode}

try:
    from . import _qkernel
except ImportError:  # extension not built
    _qkernel = None
else:
    KERNELS["cython"] = _qkernel.run_episode

_requested = os.environ.get("SUPERVISED_RL_BACKEND", "").strip().lower()
if _requested and _requested not in ("python", "cython"):
    raise ImportError(f"SUPERVISED_RL_BACKEND must be 'python' or 'cython', got {_requested!r}")
if _requested == "cython" and "cython" not in KERNELS:
    raise ImportError("SUPERVISED_RL_BACKEND=cython but the compiled kernel is not built")

BACKEND = _requested or ("cython" if "cython" in KERNELS else "python")


def get_kernel(name=None):
    name = name or BACKEND
    try:
        return KERNELS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {sorted(KERNELS)}") from None
