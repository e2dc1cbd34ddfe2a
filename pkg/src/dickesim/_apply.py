"""Kernel dispatch: compiled CSR matvec when available, scipy otherwise.

The compiled extension is optional.  Set DICKESIM_PURE=1 to force the
scipy.sparse path (used by the benchmark and the equivalence tests), and
DICKESIM_THREADS to pin the thread count of the compiled kernel.

BLAS pools are capped to one thread at import: the hot loop interleaves the
compiled kernel with numpy calls, and spinning BLAS workers otherwise starve
it (set DICKESIM_KEEP_BLAS_THREADS=1 to opt out).  Small systems run the
kernel single-threaded; there the parallel dispatch costs more than it buys.
"""
import os

import numpy as np

os.environ.setdefault("OMP_WAIT_POLICY", "passive")

try:
    from . import _kernels
except ImportError:
    _kernels = None

if not os.environ.get("DICKESIM_KEEP_BLAS_THREADS"):
    try:
        from threadpoolctl import threadpool_limits

        threadpool_limits(limits=1, user_api="blas")
    except ImportError:
        pass

_PARALLEL_NNZ = 1_000_000


def using_compiled_kernels() -> bool:
    return _kernels is not None and not os.environ.get("DICKESIM_PURE")


def kernel_threads() -> int:
    env = os.environ.get("DICKESIM_THREADS")
    if env:
        return max(1, int(env))
    return min(os.cpu_count() or 1, 8)


_NUM_THREADS = kernel_threads()


def csr_matvec(matrix, x, out=None, num_threads=None):
    """Apply a scipy CSR matrix to a complex vector.

    Results are deterministic: each output element is a serial sum in
    stored-index order regardless of thread count.
    """
    if out is None:
        out = np.empty(matrix.shape[0], dtype=np.complex128)
    if using_compiled_kernels():
        if num_threads is None:
            num_threads = _NUM_THREADS if matrix.nnz >= _PARALLEL_NNZ else 1
        _kernels.csr_matvec(matrix.indptr, matrix.indices, matrix.data,
                            x, out, num_threads)
    else:
        out[:] = matrix.dot(x)
    return out
