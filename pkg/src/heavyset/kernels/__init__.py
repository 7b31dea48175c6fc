"""Hot loops over orbits and grids.

Two interchangeable backends share one calling convention:

* ``numba`` (default when numba imports): compiled per-point loops.
* ``numpy``: vectorized over points, stepping the orbit index in Python.

Set ``HEAVYSET_BACKEND=numpy`` (or ``HEAVYSET_DISABLE_JIT=1``) to force the
numpy path. Both backends return identical results; the test suite checks it.

Positions on the torus are 64-bit fixed-point fractions, so ``x + j*g mod 1``
is plain wrapping ``uint64`` arithmetic. A point's true position exceeds its
fixed-point value by less than ``err0 + j`` units of 2^-64; membership is
reported only when that error cannot change it, otherwise the step is flagged
and the caller settles it exactly.

Sweep status codes: ``0`` heavy through the horizon, ``j > 0`` first ``j``
with ``S_j <= 0``, ``AMBIG_MEMBER`` / ``AMBIG_LEVEL`` for an unresolved step.
"""

import os
import warnings

# numba probes an old TBB at first parallel launch; the fallback layer is fine
warnings.filterwarnings("ignore", message="The TBB threading layer")

AMBIG_MEMBER = -1
AMBIG_LEVEL = -2


def _want_numba() -> bool:
    if os.environ.get("HEAVYSET_DISABLE_JIT", "") not in ("", "0"):
        return False
    return os.environ.get("HEAVYSET_BACKEND", "numba").lower() != "numpy"


from . import numpy_backend  # noqa: E402

try:
    from . import numba_backend
except ImportError:  # numba missing
    numba_backend = None

BACKEND = "numba" if (numba_backend is not None and _want_numba()) else "numpy"


def backend(name=None):
    """The module implementing the kernels (``name`` overrides the env choice)."""
    name = name or BACKEND
    if name == "numba":
        if numba_backend is None:
            raise RuntimeError("numba backend unavailable")
        return numba_backend
    return numpy_backend


def torus_sweep(*args, name=None):
    return backend(name).torus_sweep(*args)


def padic_sweep(*args, name=None):
    return backend(name).padic_sweep(*args)


def torus_chi_at(*args, name=None):
    return backend(name).torus_chi_at(*args)


def padic_chi_at(*args, name=None):
    return backend(name).padic_chi_at(*args)


def circle_packing(*args, name=None):
    return backend(name).circle_packing(*args)


def set_threads(n):
    if BACKEND == "numba" and n:
        import numba
        numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
