"""Honor the BERNERGY_THREADS cap before any BLAS-backed import happens.

Imported first by the package ``__init__``.  Setting the standard BLAS /
OpenMP environment variables only works before numpy initializes its
backend, which is why this lives in its own tiny module.
"""

import os

_BLAS_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)


def apply_thread_cap() -> None:
    cap = os.environ.get("BERNERGY_THREADS")
    if not cap:
        return
    try:
        n = max(1, int(cap))
    except ValueError:
        return
    for var in _BLAS_VARS:
        os.environ.setdefault(var, str(n))


apply_thread_cap()
