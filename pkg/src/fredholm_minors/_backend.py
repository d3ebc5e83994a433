"""Select the compiled kernels when available, otherwise the numpy twins.

Set ``FREDHOLM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _pykernels

BACKEND = "python"
kernels = _pykernels

if os.environ.get("FREDHOLM_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        kernels = _ckernels
        BACKEND = "cython"


def subset_minor_sums(N, w, xs, ys, pool, p, lo, hi):
    return kernels.subset_minor_sums(N, w, xs, ys, pool, p, lo, hi)


def grassmann_mul(a, b, nbits):
    return kernels.grassmann_mul(a, b, nbits)
