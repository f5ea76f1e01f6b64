"""Evaluation kernel backend, picked once at import.

The compiled extension is used when it was built; otherwise, or when
``QDAG_PURE_PYTHON`` is set to a non-empty value, the pure-Python kernels.
"""

import os

from . import _pykernels

if os.environ.get("QDAG_PURE_PYTHON"):
    backend = _pykernels
else:
    try:
        from . import _kernels as backend
    except ImportError:
        backend = _pykernels

BACKENDS = {"python": _pykernels}
try:
    from . import _kernels

    BACKENDS["cython"] = _kernels
except ImportError:
    pass

BACKEND = backend.BACKEND
