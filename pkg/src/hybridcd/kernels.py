"""Backend selection for the coordinate-target kernels.

The compiled Cython extension is used when it is importable; otherwise the
numpy implementation in ``_kernels_py`` is used.  Setting the environment
variable ``HYBRIDCD_PURE_PYTHON=1`` forces the fallback.  Both backends
return bit-identical results.
"""

import os

from . import _kernels_py as python_backend

GRADIENT = python_backend.GRADIENT
LINE_SEARCH = python_backend.LINE_SEARCH
NO_CHANGE = python_backend.NO_CHANGE

try:
    from . import _kernels as compiled_backend
except ImportError:  # extension not built
    compiled_backend = None

if compiled_backend is not None and not os.environ.get("HYBRIDCD_PURE_PYTHON"):
    backend = compiled_backend
else:
    backend = python_backend

BACKEND = backend.BACKEND


def available_backends():
    """All importable backend modules, compiled first."""
    found = [python_backend]
    if compiled_backend is not None:
        found.insert(0, compiled_backend)
    return found


def get_backend(name=None):
    """Return the backend module called ``name`` (``"cython"`` or ``"python"``)."""
    if name is None:
        return backend
    for mod in available_backends():
        if mod.BACKEND == name:
            return mod
    raise ValueError(f"kernel backend {name!r} is not available")
