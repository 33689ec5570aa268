"""Kernel backend selection.

The hot numeric kernels in :mod:`scramblekit._kernels` exist in two
implementations: numba ``@njit`` loops and pure-numpy vectorized code.
The environment variable ``SCRAMBLEKIT_BACKEND`` picks one:

  ``numba``  (default) use the JIT kernels; falls back to numpy with a
             warning if numba cannot be imported,
  ``numpy``  force the pure-numpy path.

The choice is read once at import time.
"""

import os
import warnings

_ENV_VAR = "SCRAMBLEKIT_BACKEND"
_VALID = ("numba", "numpy")


def _resolve() -> str:
    requested = os.environ.get(_ENV_VAR, "numba").strip().lower()
    if requested not in _VALID:
        raise ValueError(
            f"{_ENV_VAR}={requested!r} is not one of {_VALID}"
        )
    if requested == "numba":
        try:
            import numba  # noqa: F401
        except ImportError:
            warnings.warn(
                "numba is not importable; falling back to the numpy backend",
                RuntimeWarning,
            )
            return "numpy"
    return requested


BACKEND = _resolve()
USE_NUMBA = BACKEND == "numba"
