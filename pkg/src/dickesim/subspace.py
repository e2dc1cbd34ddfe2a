"""Exact excitation-bounded truncation of the flattened basis.

The generator never raises the total excitation on either side of a density
matrix component: the Hamiltonian conserves (n + N/2) + l per side and every
jump term lowers it.  A probe whose components all satisfy
(n + N/2) + l <= B and (m + N/2) + k <= B therefore stays in that subspace
exactly, and evolving the restricted vector reproduces the full dynamics of
those components bit-for-bit zero outside.  Probes with the cavity in vacuum
always admit B = N; a Dicke-n probe admits B = n.

This is purely an acceleration: all public interfaces speak full-basis
DensityStates, and the restriction scatters back before analysis.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from ._apply import csr_matvec
from .basis import BasisLayout
from .operators import SuperOp
from .state import DensityState

__all__ = ["excitation_indices", "SubspaceState", "restrict_superop"]


@lru_cache(maxsize=64)
def excitation_indices(layout: BasisLayout, bound: int) -> np.ndarray:
    """Sorted full-basis indices with both side excitations <= bound."""
    c1 = layout.boson_cutoff + 1
    up_bra = (layout.two_n + layout.n_qubits) // 2   # number of up spins, bra
    up_ket = (layout.two_m + layout.n_qubits) // 2
    l = np.arange(c1)
    bra_ok = (up_bra[:, None] + l[None, :]) <= bound   # (spin, l)
    ket_ok = (up_ket[:, None] + l[None, :]) <= bound   # (spin, k)
    mask = bra_ok[:, :, None] & ket_ok[:, None, :]
    idx = np.nonzero(mask.ravel())[0]
    idx.setflags(write=False)
    return idx


@lru_cache(maxsize=64)
def _subspace_tables(layout: BasisLayout, bound: int):
    """(trace positions, conjugation permutation) inside the subspace."""
    idx = excitation_indices(layout, bound)
    trace_full = layout.trace_indices()
    trace_pos = np.searchsorted(idx, np.intersect1d(trace_full, idx))
    conj_full = layout.conjugation_permutation()
    partners = conj_full[idx]
    conj_pos = np.searchsorted(idx, partners)
    # swapping bra and ket preserves the bound, so partners stay inside
    assert np.array_equal(idx[conj_pos], partners)
    return trace_pos, conj_pos


@dataclass
class SubspaceState:
    """State vector restricted to an excitation-bounded index set."""

    layout: BasisLayout
    bound: int
    data: np.ndarray

    @classmethod
    def from_full(cls, state: DensityState, bound: int) -> "SubspaceState":
        idx = excitation_indices(state.layout, bound)
        outside = np.delete(np.arange(state.layout.total_dim), idx)
        if np.any(state.data[outside]):
            raise ValueError(f"state has support above excitation bound {bound}")
        return cls(state.layout, bound, state.data[idx].copy())

    def to_full(self) -> DensityState:
        full = DensityState.zeros(self.layout)
        full.data[excitation_indices(self.layout, self.bound)] = self.data
        return full

    def replace_data(self, data: np.ndarray) -> "SubspaceState":
        return SubspaceState(self.layout, self.bound, data)

    def trace(self) -> complex:
        trace_pos, _ = _subspace_tables(self.layout, self.bound)
        return complex(self.data[trace_pos].sum())

    def hermiticity_residual(self) -> float:
        _, conj_pos = _subspace_tables(self.layout, self.bound)
        return float(np.max(np.abs(self.data - np.conj(self.data[conj_pos]))))


class RestrictedOp:
    """Submatrix of a SuperOp on an excitation-bounded index set."""

    def __init__(self, full: SuperOp, indices: np.ndarray):
        sub = full.matrix[indices][:, indices].tocsr()
        sub.sort_indices()
        self.matrix = sp.csr_matrix(
            (sub.data.astype(np.complex128, copy=False),
             sub.indices.astype(np.int32, copy=False),
             sub.indptr.astype(np.int32, copy=False)), shape=sub.shape)

    def apply(self, x, out=None):
        x = np.ascontiguousarray(x, dtype=np.complex128)
        return csr_matvec(self.matrix, x, out)

    def __call__(self, t, x):
        return self.apply(x)


def restrict_superop(full: SuperOp, bound: int) -> RestrictedOp:
    return RestrictedOp(full, excitation_indices(full.layout, bound))
