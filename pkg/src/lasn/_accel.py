"""Backend switch for the compiled kernels.

Hot loops are written once as plain Python over numpy arrays and compiled
with numba when it is importable. Setting ``LASN_NO_NUMBA=1`` in the
environment (before import) forces the vectorized numpy fallbacks instead.
"""

import os

_FALSE = {"", "0", "false", "no", "off"}

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an optional extra
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and os.environ.get("LASN_NO_NUMBA", "").strip().lower() in _FALSE


def njit(func):
    """Compile ``func`` in nopython mode, or return it untouched without numba."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
