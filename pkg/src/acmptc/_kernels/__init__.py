"""Hot MLP kernels: compiled extension when built, numpy fallback otherwise.

Set ``ACMPTC_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _mlp_py as python_backend

compiled_backend = None
if os.environ.get("ACMPTC_PURE_PYTHON", "").lower() not in ("1", "true", "yes"):
    try:
        from . import _mlp as compiled_backend
    except ImportError:  # extension not built
        compiled_backend = None

active = compiled_backend if compiled_backend is not None else python_backend
BACKEND = "cython" if compiled_backend is not None else "python"

forward = active.forward
backward = active.backward

__all__ = ["forward", "backward", "BACKEND", "python_backend", "compiled_backend"]
