"""Hot-loop kernels with an import-time backend choice.

The compiled Cython module is used when it is importable; otherwise the
NumPy/pure-Python twins are used. Setting ``SEQSEL_PURE_PYTHON=1`` forces the
fallback (used by the benchmark and the backend-equivalence tests).
"""

import os

from . import _kernels_py

if os.environ.get("SEQSEL_PURE_PYTHON"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"
    else:
        BACKEND = "cython"

log_gammainc_lower = _impl.log_gammainc_lower
nonlinear_phase = _impl.nonlinear_phase
window_energy = _impl.window_energy

__all__ = ["BACKEND", "log_gammainc_lower", "nonlinear_phase", "window_energy"]
