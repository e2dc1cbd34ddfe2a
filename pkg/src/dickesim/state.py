"""Density matrices in the flattened symmetric basis.

A DensityState holds the complex coefficient vector rho_{(J,n,m),l,k}.  The
stored J-blocks aggregate all degenerate copies of a sector, so the trace is
the plain sum of diagonal components and the reconstructed block for sector J
equals deg(J) times the per-copy density matrix.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisLayout, sector_weights

__all__ = ["DensityState"]


@dataclass
class DensityState:
    layout: BasisLayout
    data: np.ndarray

    def __post_init__(self):
        self.data = np.ascontiguousarray(self.data, dtype=np.complex128)
        if self.data.shape != (self.layout.total_dim,):
            raise ValueError(
                f"state vector has shape {self.data.shape}, expected "
                f"({self.layout.total_dim},)")

    @classmethod
    def zeros(cls, layout: BasisLayout) -> "DensityState":
        return cls(layout, np.zeros(layout.total_dim, dtype=np.complex128))

    def copy(self) -> "DensityState":
        return DensityState(self.layout, self.data.copy())

    def replace_data(self, data: np.ndarray) -> "DensityState":
        return DensityState(self.layout, data)

    def trace(self) -> complex:
        return complex(self.data[self.layout.trace_indices()].sum())

    def hermiticity_residual(self) -> float:
        """max |rho - rho^dagger| over components."""
        perm = self.layout.conjugation_permutation()
        return float(np.max(np.abs(self.data - np.conj(self.data[perm]))))

    def block(self, two_j: int) -> np.ndarray:
        """Sector J as a dense matrix over (n, l) x (m, k), copies summed."""
        lay = self.layout
        c1 = lay.boson_cutoff + 1
        sl = lay.sector_slice(two_j)
        b = two_j + 1
        cube = self.data.reshape(lay.spin_dim, c1, c1)[sl]
        return (cube.reshape(b, b, c1, c1)
                    .transpose(0, 2, 1, 3)
                    .reshape(b * c1, b * c1))

    def set_block(self, two_j: int, block: np.ndarray) -> None:
        lay = self.layout
        c1 = lay.boson_cutoff + 1
        b = two_j + 1
        cube = (np.asarray(block, dtype=np.complex128)
                  .reshape(b, c1, b, c1).transpose(0, 2, 1, 3))
        self.data.reshape(lay.spin_dim, c1, c1)[lay.sector_slice(two_j)] = \
            cube.reshape(b * b, c1, c1)

    def blocks(self):
        """Iterate (two_j, block matrix) over sectors, descending J."""
        for tj in sorted(self.layout.sector_offset, reverse=True):
            yield tj, self.block(tj)

    def purity(self) -> float:
        """tr(rho^2) of the physical state, accounting for sector degeneracy."""
        w = sector_weights(self.layout.n_qubits)
        total = 0.0
        for tj, blk in self.blocks():
            total += np.vdot(blk, blk).real / w.deg_of(tj)
        return total

    def min_block_eigenvalue(self) -> float:
        """Smallest eigenvalue over all stored J-blocks (0 for empty blocks)."""
        vals = [0.0]
        for _, blk in self.blocks():
            if np.any(blk):
                vals.append(float(np.linalg.eigvalsh(_hermitize(blk))[0]))
        return min(vals)


def _hermitize(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.conj().T)
