"""Select the kernel implementation at import time.

The compiled ``_kernels`` extension is preferred; ``RMTFOF_BACKEND=python``
forces the NumPy fallback (used by the benchmark and the parity tests).
"""
import os

from . import _pykernels

python_kernels = _pykernels

try:
    from . import _kernels as compiled_kernels
except ImportError:  # extension not built
    compiled_kernels = None

if compiled_kernels is not None and os.environ.get("RMTFOF_BACKEND", "").lower() != "python":
    kernels = compiled_kernels
    BACKEND = "cython"
else:
    kernels = _pykernels
    BACKEND = "python"


def available_backends():
    names = {"python": python_kernels}
    if compiled_kernels is not None:
        names["cython"] = compiled_kernels
    return names
