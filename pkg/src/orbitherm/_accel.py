"""Optional numba acceleration.

Hot kernels are written once in plain Python/numpy style and compiled with
``njit`` when numba is importable.  Setting ``ORBITHERM_NO_NUMBA=1`` in the
environment forces the pure-numpy fallback paths (each kernel module keeps
a vectorised numpy twin next to the jitted loop).
"""
import os

_disabled = os.environ.get("ORBITHERM_NO_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    if _disabled:
        raise ImportError("numba disabled by ORBITHERM_NO_NUMBA")
    import numba

    # prefer OpenMP / workqueue; the system TBB is too old and only warns
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
    HAVE_NUMBA = True

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return numba.njit(*args, **kwargs)

    prange = numba.prange

    def set_threads(n):
        n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
        numba.set_num_threads(n)
        return n

except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f

    prange = range

    def set_threads(n):
        return 1


def backend():
    return "numba" if HAVE_NUMBA else "numpy"
