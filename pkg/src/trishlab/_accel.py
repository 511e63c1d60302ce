"""Optional numba acceleration.

Set ``TRISHLAB_NUMBA=0`` to run every kernel as plain Python/numpy. The
kernels are written once; the flag only decides whether they get compiled.
"""
import os

_FLAG = os.environ.get("TRISHLAB_NUMBA", "1").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is optional
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("0", "false", "no", "off")


def jit(fn):
    """Compile ``fn`` with ``numba.njit`` when enabled, else return it untouched."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return fn


def py_func(fn):
    """The interpreted version of a (possibly) jitted kernel."""
    return getattr(fn, "py_func", fn)


def worker_count(requested=None) -> int:
    """Thread count for parallel runs, capped by ``TRISHLAB_THREADS`` when set."""
    n = requested if requested else (os.cpu_count() or 1)
    cap = os.environ.get("TRISHLAB_THREADS", "").strip()
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return max(1, int(n))
