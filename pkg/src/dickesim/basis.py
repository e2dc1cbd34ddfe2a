"""Flattened basis for permutation-symmetric qubit ensembles with a boson mode.

A permutation-invariant density matrix of N qubits is block diagonal in the
total spin length J and can be expanded over elements
|J,n><J,m| (x) |l><k|, where n, m are spin projections and l, k boson
occupation numbers up to a cutoff equal to N.  The (J, n, m) triple is packed
into one flat spin index; combined with the boson pair (l, k) this gives a
vector of length spin_dim * (cutoff+1)**2 holding the full state.

All spin quantum numbers are stored doubled (2J, 2n, 2m) so that half-integer
bookkeeping stays exact integer arithmetic.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "SpinTriple",
    "BasisLayout",
    "SectorWeights",
    "spin_lengths",
    "two_j_values",
    "build_layout",
    "sector_weights",
]


def two_j_values(n_qubits: int) -> list[int]:
    """Doubled total-spin lengths 2J in descending order: N, N-2, ..., (N mod 2)."""
    if n_qubits < 1:
        raise ValueError(f"need at least one qubit, got {n_qubits}")
    return list(range(n_qubits, -1, -2))


def spin_lengths(n_qubits: int) -> list[float]:
    """Total spin lengths J = N/2, N/2-1, ... down to 0 or 1/2, descending."""
    return [tj / 2.0 for tj in two_j_values(n_qubits)]


@dataclass(frozen=True)
class SpinTriple:
    """One basis element |J,n><J,m| of a spin sector, stored as doubled integers."""

    two_j: int
    two_n: int
    two_m: int

    def __post_init__(self):
        if self.two_j < 0:
            raise ValueError("negative spin length")
        for tx in (self.two_n, self.two_m):
            if abs(tx) > self.two_j or (self.two_j - tx) % 2 != 0:
                raise ValueError(f"projection {tx/2} invalid for J={self.two_j/2}")

    @property
    def j(self) -> float:
        return self.two_j / 2.0

    @property
    def n(self) -> float:
        return self.two_n / 2.0

    @property
    def m(self) -> float:
        return self.two_m / 2.0


@dataclass(frozen=True, eq=False)
class BasisLayout:
    """Index tables for the flattened symmetric basis.

    Spin triples are ordered by descending J, then descending n, then
    descending m, so the fully symmetric sector (J = N/2) occupies the first
    (N+1)**2 flat indices.  Only valid triples (|n|,|m| <= J) are assigned
    indices; the full flat state index for (i, l, k) is
    (i*(cutoff+1) + l)*(cutoff+1) + k.
    """

    n_qubits: int
    boson_cutoff: int
    spin_dim: int
    total_dim: int
    # flat spin index -> doubled quantum numbers
    two_j: np.ndarray = field(repr=False)
    two_n: np.ndarray = field(repr=False)
    two_m: np.ndarray = field(repr=False)
    # doubled J -> offset of that sector's first flat spin index
    sector_offset: dict = field(repr=False)
    # array lookup for the same offsets, indexed by 2J (-1 where invalid)
    _offset_lookup: np.ndarray = field(repr=False)

    def spin_index(self, two_j, two_n, two_m):
        """Flat spin index of |J,n><J,m|; vectorized over array inputs."""
        two_j = np.asarray(two_j)
        off = self._offset_lookup[two_j]
        row = (two_j - np.asarray(two_n)) >> 1
        col = (two_j - np.asarray(two_m)) >> 1
        return off + row * (two_j + 1) + col

    def triple_to_flat(self, triple: SpinTriple) -> int:
        if triple.two_j not in self.sector_offset:
            raise KeyError(f"J={triple.j} not a sector of N={self.n_qubits}")
        return int(self.spin_index(triple.two_j, triple.two_n, triple.two_m))

    def flat_to_triple(self, i: int) -> SpinTriple:
        return SpinTriple(int(self.two_j[i]), int(self.two_n[i]), int(self.two_m[i]))

    def full_index(self, i, l, k):
        """Flat index into the state vector for spin index i and bosons (l, k)."""
        c1 = self.boson_cutoff + 1
        return (np.asarray(i) * c1 + np.asarray(l)) * c1 + np.asarray(k)

    def sector_slice(self, two_j: int) -> slice:
        """Range of flat spin indices belonging to sector J."""
        off = self.sector_offset[two_j]
        return slice(off, off + (two_j + 1) ** 2)

    @property
    def boson_pair_dim(self) -> int:
        return (self.boson_cutoff + 1) ** 2

    def trace_indices(self) -> np.ndarray:
        """Flat state indices of the diagonal components (n == m, l == k)."""
        return _trace_indices(self)

    def conjugation_permutation(self) -> np.ndarray:
        """Permutation P with rho = conj(rho[P]) for Hermitian states.

        Maps the component (J,n,m,l,k) to (J,m,n,k,l).
        """
        return _conjugation_permutation(self)


@lru_cache(maxsize=64)
def _trace_indices(layout: BasisLayout) -> np.ndarray:
    c1 = layout.boson_cutoff + 1
    spins = np.nonzero(layout.two_n == layout.two_m)[0]
    l = np.arange(c1)
    idx = layout.full_index(spins[:, None], l[None, :], l[None, :])
    return np.sort(idx.ravel())


@lru_cache(maxsize=64)
def _conjugation_permutation(layout: BasisLayout) -> np.ndarray:
    c1 = layout.boson_cutoff + 1
    i_swap = layout.spin_index(layout.two_j, layout.two_m, layout.two_n)
    l = np.arange(c1)
    # source for destination (i,l,k) is (i_swap, k, l)
    perm = layout.full_index(i_swap[:, None, None], l[None, None, :], l[None, :, None])
    return perm.ravel()


@lru_cache(maxsize=64)
def build_layout(n_qubits: int) -> BasisLayout:
    """Enumerate all valid (J, n, m) triples and build the index tables."""
    tjs = two_j_values(n_qubits)
    spin_dim = sum((tj + 1) ** 2 for tj in tjs)
    two_j = np.empty(spin_dim, dtype=np.int64)
    two_n = np.empty(spin_dim, dtype=np.int64)
    two_m = np.empty(spin_dim, dtype=np.int64)
    sector_offset = {}
    pos = 0
    for tj in tjs:
        size = (tj + 1) ** 2
        sector_offset[tj] = pos
        proj = np.arange(tj, -tj - 1, -2)  # descending n, m
        two_j[pos:pos + size] = tj
        two_n[pos:pos + size] = np.repeat(proj, tj + 1)
        two_m[pos:pos + size] = np.tile(proj, tj + 1)
        pos += size
    offset_lookup = np.full(n_qubits + 1, -1, dtype=np.int64)
    for tj, off in sector_offset.items():
        offset_lookup[tj] = off
    for arr in (two_j, two_n, two_m, offset_lookup):
        arr.setflags(write=False)
    cutoff = n_qubits
    return BasisLayout(
        n_qubits=n_qubits,
        boson_cutoff=cutoff,
        spin_dim=spin_dim,
        total_dim=spin_dim * (cutoff + 1) ** 2,
        two_j=two_j,
        two_n=two_n,
        two_m=two_m,
        sector_offset=sector_offset,
        _offset_lookup=offset_lookup,
    )


@dataclass(frozen=True)
class SectorWeights:
    """Multiplicity and degeneracy of each total-spin sector.

    alpha[J] = C(N, N/2 - J) counts spin configurations with a given
    projection; deg[J] is the number of independent copies of sector J in the
    N-qubit Hilbert space.  Both are exact integers and satisfy
    sum_J deg[J] * (2J+1) = 2**N.
    """

    n_qubits: int
    two_j: tuple
    alpha: tuple
    deg: tuple

    def alpha_of(self, two_j: int) -> int:
        """alpha for doubled spin length 2J; 0 outside the valid range."""
        if two_j > self.n_qubits or two_j < 0:
            return 0
        return self.alpha[self.two_j.index(two_j)]

    def deg_of(self, two_j: int) -> int:
        return self.deg[self.two_j.index(two_j)]


@lru_cache(maxsize=64)
def sector_weights(n_qubits: int) -> SectorWeights:
    tjs = two_j_values(n_qubits)
    alpha = []
    deg = []
    for tj in tjs:
        k = (n_qubits - tj) // 2
        a = math.comb(n_qubits, k)
        # C(N,k)*(2J+1)/(N/2+J+1) == C(N,k) - C(N,k-1), kept in integers
        d = a - math.comb(n_qubits, k - 1) if k >= 1 else a
        alpha.append(a)
        deg.append(d)
    return SectorWeights(n_qubits=n_qubits, two_j=tuple(tjs),
                         alpha=tuple(alpha), deg=tuple(deg))
