"""Backend selection for the inner-solver kernels.

The compiled extension is used when it imports; otherwise the numpy
implementation takes over.  Set ``ASYNCADMM_PURE_PYTHON=1`` to force the
fallback.  ``BACKEND`` names the active choice.
"""

import os

from . import _kernels_py

if os.environ.get("ASYNCADMM_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
pr_value_grad = _impl.pr_value_grad
pr_prox = _impl.pr_prox
quad_composite_prox = _impl.quad_composite_prox

python_backend = _kernels_py


def compiled_backend():
    """Return the compiled module, or ``None`` if it was not built."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels
