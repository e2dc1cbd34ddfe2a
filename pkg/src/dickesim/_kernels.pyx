# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled hot kernels: sparse right-hand-side application.

The integrator spends essentially all of its time applying the precomputed
superoperator to the state vector, so this one CSR matvec is worth compiling.
Rows are partitioned statically across threads; every row is summed serially
in index order, so results are bit-identical for any thread count.
"""
from cython.parallel import prange


def csr_matvec(const int[::1] indptr, const int[::1] indices,
               const double complex[::1] data, const double complex[::1] x,
               double complex[::1] out, int num_threads):
    """out[i] = sum_j data[indptr[i]:indptr[i+1]] * x[indices[...]]."""
    cdef Py_ssize_t n = out.shape[0]
    cdef Py_ssize_t i, j
    cdef double complex acc
    if num_threads > 1:
        for i in prange(n, nogil=True, schedule='static',
                        num_threads=num_threads):
            acc = 0
            for j in range(indptr[i], indptr[i + 1]):
                acc = acc + data[j] * x[indices[j]]
            out[i] = acc
    else:
        with nogil:
            for i in range(n):
                acc = 0
                for j in range(indptr[i], indptr[i + 1]):
                    acc = acc + data[j] * x[indices[j]]
                out[i] = acc
