"""Sparse superoperators for the dissipative Tavis-Cummings dynamics.

Everything acts on the flattened coefficient vector rho_{(J,n,m),l,k}.
Operators acting on rho from the left touch the bra-side indices (n, l);
right-acting operators touch (m, k).  Each term factorizes into a sparse
matrix on the flat spin index tensored with a sparse matrix on the boson
pair index, so the full generator is a Kronecker sum assembled once per
parameter point and applied matrix-free inside the integrator.

Note on index conventions: the branch coefficient tables of the local-decay
dissipator are indexed by spin projections (n, m), not by boson occupation
numbers, even though some sources reuse the same letters for both.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
import scipy.sparse as sp

from ._apply import csr_matvec
from .basis import BasisLayout, SectorWeights, sector_weights

__all__ = [
    "SimParams",
    "SuperOp",
    "spin_matrix_elements",
    "boson_left_right",
    "hamiltonian_commutator",
    "cavity_dissipator",
    "local_qubit_dissipator",
    "assemble_rhs",
]


@dataclass(frozen=True)
class SimParams:
    """Physical parameters: qubit number, coupling, decay rates, frequencies.

    Rates are in units of inverse time; on resonance and in the rotating
    frame both frequencies vanish, which is the default.
    """

    N: int
    g: float
    kappa: float
    gamma: float
    omega_q: float = 0.0
    omega_c: float = 0.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError(f"N must be a positive integer, got {self.N}")
        if self.g < 0:
            raise ValueError(f"coupling g must be nonnegative, got {self.g}")
        if self.kappa < 0 or self.gamma < 0:
            raise ValueError("decay rates must be nonnegative")


class SpinElements(NamedTuple):
    """Matrix elements of S_z, S_+, S_- within one J sector.

    Arrays run over m = J, J-1, ..., -J (descending).  raise_coeff[i] is the
    amplitude of S_+|J, m_i> -> |J, m_i + 1> (zero at m = J); lower_coeff[i]
    the amplitude of S_-|J, m_i> -> |J, m_i - 1> (zero at m = -J).
    """

    m: np.ndarray
    sz: np.ndarray
    raise_coeff: np.ndarray
    lower_coeff: np.ndarray


def spin_matrix_elements(j) -> SpinElements:
    """Collective spin ladder elements for total spin length j (half-integer ok)."""
    two_j = int(round(2 * j))
    if two_j < 0 or abs(two_j - 2 * j) > 1e-12:
        raise ValueError(f"invalid spin length {j}")
    two_m = np.arange(two_j, -two_j - 1, -2)
    m = two_m / 2.0
    raise_coeff = np.sqrt((two_j * (two_j + 2) - two_m * (two_m + 2)) / 4.0)
    lower_coeff = np.sqrt((two_j * (two_j + 2) - two_m * (two_m - 2)) / 4.0)
    return SpinElements(m=m, sz=m.copy(), raise_coeff=raise_coeff,
                        lower_coeff=lower_coeff)


# ---------------------------------------------------------------------------
# elementary sparse factors

def _raise_w(two_j, two_x):
    """Amplitude of S_+|J,x>, from doubled quantum numbers."""
    return np.sqrt((two_j * (two_j + 2) - two_x * (two_x + 2)) / 4.0)


def _lower_w(two_j, two_x):
    return np.sqrt((two_j * (two_j + 2) - two_x * (two_x - 2)) / 4.0)


def _spin_shift(layout: BasisLayout, dn: int, dm: int, weight) -> sp.csr_matrix:
    """Sparse map on the flat spin index shifting (n, m) by (dn, dm) doubled units."""
    tj, tn, tm = layout.two_j, layout.two_n, layout.two_m
    tn2, tm2 = tn + dn, tm + dm
    ok = (np.abs(tn2) <= tj) & (np.abs(tm2) <= tj)
    w = np.zeros(layout.spin_dim)
    w[ok] = weight(tj[ok], tn[ok], tm[ok])
    ok &= w != 0.0
    rows = layout.spin_index(tj[ok], tn2[ok], tm2[ok])
    cols = np.nonzero(ok)[0]
    return sp.csr_matrix((w[ok], (rows, cols)),
                         shape=(layout.spin_dim,) * 2)


def _spin_diag(layout: BasisLayout, values) -> sp.csr_matrix:
    return sp.diags(values, format="csr")


def _boson_shift(cutoff: int, dl: int, dk: int, weight) -> sp.csr_matrix:
    """Sparse map on the boson pair index p = l*(cutoff+1) + k."""
    c1 = cutoff + 1
    l, k = np.meshgrid(np.arange(c1), np.arange(c1), indexing="ij")
    l, k = l.ravel(), k.ravel()
    l2, k2 = l + dl, k + dk
    ok = (l2 >= 0) & (l2 <= cutoff) & (k2 >= 0) & (k2 <= cutoff)
    w = weight(l[ok], k[ok])
    rows = l2[ok] * c1 + k2[ok]
    cols = l[ok] * c1 + k[ok]
    keep = w != 0.0
    return sp.csr_matrix((w[keep], (rows[keep], cols[keep])), shape=(c1 * c1,) * 2)


class BosonOps(NamedTuple):
    """Left/right boson ladder maps on the pair index (l, k).

    Raising maps truncate at the cutoff: no population is created above it.
    Right-acting maps compose in reverse: rho(AB) applies the map of A first.
    Number operators are a_l_dag @ a_l and a_r @ a_r_dag, both exact under
    the truncation (they lower before raising).
    """

    a_l: sp.csr_matrix
    a_l_dag: sp.csr_matrix
    a_r: sp.csr_matrix
    a_r_dag: sp.csr_matrix


def boson_left_right(layout: BasisLayout) -> BosonOps:
    c = layout.boson_cutoff
    return BosonOps(
        a_l=_boson_shift(c, -1, 0, lambda l, k: np.sqrt(l)),
        a_l_dag=_boson_shift(c, +1, 0, lambda l, k: np.sqrt(l + 1.0)),
        a_r=_boson_shift(c, 0, +1, lambda l, k: np.sqrt(k + 1.0)),
        a_r_dag=_boson_shift(c, 0, -1, lambda l, k: np.sqrt(k)),
    )


# ---------------------------------------------------------------------------
# superoperator container

class SuperOp:
    """Precomputed sparse action rho -> d(rho)/dt on the flattened basis.

    The matrix is CSR, i.e. grouped by destination component; application is
    a single fused pass.  Instances are immutable after construction and safe
    to share across workers.
    """

    def __init__(self, layout: BasisLayout, matrix: sp.spmatrix):
        m = matrix.tocsr()
        m.sum_duplicates()
        m.eliminate_zeros()
        m.sort_indices()
        self.layout = layout
        self.matrix = sp.csr_matrix(
            (m.data.astype(np.complex128, copy=False),
             m.indices.astype(np.int32, copy=False),
             m.indptr.astype(np.int32, copy=False)),
            shape=m.shape)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def apply(self, x: np.ndarray, out: np.ndarray = None) -> np.ndarray:
        x = np.ascontiguousarray(x, dtype=np.complex128)
        return csr_matvec(self.matrix, x, out)

    def __call__(self, t, x):
        # scipy.integrate rhs signature
        return self.apply(x)

    def __add__(self, other: "SuperOp") -> "SuperOp":
        if other.layout is not self.layout:
            raise ValueError("cannot add superoperators on different layouts")
        return SuperOp(self.layout, self.matrix + other.matrix)


# ---------------------------------------------------------------------------
# generator pieces

def hamiltonian_commutator(params: SimParams, layout: BasisLayout) -> SuperOp:
    """-i[H, rho] for H = omega_q S_z + omega_c a^dag a + g(a^dag S_- + a S_+)."""
    if params.N != layout.n_qubits:
        raise ValueError("params.N does not match layout")
    b = boson_left_right(layout)
    eye_s = sp.identity(layout.spin_dim, format="csr")
    eye_b = sp.identity(layout.boson_pair_dim, format="csr")

    sz_l = _spin_diag(layout, layout.two_n / 2.0)
    sz_r = _spin_diag(layout, layout.two_m / 2.0)
    sm_l = _spin_shift(layout, -2, 0, lambda tj, tn, tm: _lower_w(tj, tn))
    sp_l = _spin_shift(layout, +2, 0, lambda tj, tn, tm: _raise_w(tj, tn))
    # <J,m|S_- = raise_w(J,m) <J,m+1| and <J,m|S_+ = lower_w(J,m) <J,m-1|
    sm_r = _spin_shift(layout, 0, +2, lambda tj, tn, tm: _raise_w(tj, tm))
    sp_r = _spin_shift(layout, 0, -2, lambda tj, tn, tm: _lower_w(tj, tm))

    n_l = b.a_l_dag @ b.a_l
    n_r = b.a_r @ b.a_r_dag

    h_left = (params.omega_q * sp.kron(sz_l, eye_b)
              + params.omega_c * sp.kron(eye_s, n_l)
              + params.g * (sp.kron(sm_l, b.a_l_dag) + sp.kron(sp_l, b.a_l)))
    h_right = (params.omega_q * sp.kron(sz_r, eye_b)
               + params.omega_c * sp.kron(eye_s, n_r)
               + params.g * (sp.kron(sm_r, b.a_r_dag) + sp.kron(sp_r, b.a_r)))
    return SuperOp(layout, -1j * (h_left - h_right))


def cavity_dissipator(kappa: float, layout: BasisLayout) -> SuperOp:
    """kappa * (a rho a^dag - (a^dag a rho + rho a^dag a) / 2)."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    b = boson_left_right(layout)
    eye_s = sp.identity(layout.spin_dim, format="csr")
    jump = b.a_l @ b.a_r_dag
    decay = 0.5 * (b.a_l_dag @ b.a_l + b.a_r @ b.a_r_dag)
    return SuperOp(layout, kappa * sp.kron(eye_s, jump - decay))


def _branch_entries(layout: BasisLayout, weights: SectorWeights):
    """COO entries of sum_j sigma-_j rho sigma+_j on the flat spin index.

    Local decay routes each sector J into J, J-1 and J+1 with sector-dependent
    prefactors; all branch amplitudes vanish identically outside the valid
    projection range, and for J=0 only the raising branch survives (keeping
    the 1/J prefactors finite).
    """
    rows, cols, vals = [], [], []
    tjs = sorted(layout.sector_offset, reverse=True)
    tj_min = tjs[-1]
    n = weights.n_qubits
    for tj in tjs:
        j = tj / 2.0
        alpha_up = weights.alpha_of(tj + 2)
        d_j = weights.deg_of(tj)
        proj = np.arange(tj, -tj - 1, -2)
        tn, tm = [a.ravel() for a in np.meshgrid(proj, proj, indexing="ij")]
        src = layout.spin_index(np.full_like(tn, tj), tn, tm)

        def add(tj_dst, pref, coeff):
            ok = (np.abs(tn - 2) <= tj_dst) & (np.abs(tm - 2) <= tj_dst)
            w = pref * coeff(tn[ok]) * coeff(tm[ok])
            keep = w != 0.0
            if not np.any(keep):
                return
            dst = layout.spin_index(np.full(ok.sum(), tj_dst), tn[ok] - 2, tm[ok] - 2)
            rows.append(dst[keep])
            cols.append(src[ok][keep])
            vals.append(w[keep])

        if tj > 0:
            pref_keep = (1.0 / (2 * j)) * (
                1.0 + (alpha_up / d_j) * (2 * j + 1) / (j + 1))
            add(tj, pref_keep,
                lambda tx: np.sqrt((tj + tx) * (tj - tx + 2) / 4.0))
        if tj > 0 and tj - 2 >= tj_min:
            pref_down = weights.alpha_of(tj) / (2 * j * d_j)
            add(tj - 2, pref_down,
                lambda tx: -np.sqrt((tj + tx) * (tj + tx - 2) / 4.0))
        if tj + 2 <= n:
            pref_up = alpha_up / (2 * (j + 1) * d_j)
            add(tj + 2, pref_up,
                lambda tx: np.sqrt((tj - tx + 2) * (tj - tx + 4) / 4.0))
    if not rows:
        return np.array([]), np.array([]), np.array([])
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def local_qubit_dissipator(gamma: float, n_qubits: int, layout: BasisLayout,
                           weights: SectorWeights = None) -> SuperOp:
    """gamma * sum_j D[sigma-_j](rho) in the collective basis.

    The jump part is the three-branch map above; the anticommutator part uses
    sum_j sigma+_j sigma-_j = N/2 + S_z, which is what makes the whole
    dissipator trace-preserving.
    """
    if gamma < 0:
        raise ValueError("gamma must be nonnegative")
    if n_qubits != layout.n_qubits:
        raise ValueError("n_qubits does not match layout")
    if weights is None:
        weights = sector_weights(n_qubits)
    eye_b = sp.identity(layout.boson_pair_dim, format="csr")
    rows, cols, vals = _branch_entries(layout, weights)
    jump = sp.csr_matrix((vals, (rows, cols)), shape=(layout.spin_dim,) * 2)
    # -(N/2 + (n + m)/2) on the diagonal
    decay = _spin_diag(layout, -(n_qubits / 2.0
                                 + (layout.two_n + layout.two_m) / 4.0))
    return SuperOp(layout, gamma * sp.kron(jump + decay, eye_b))


def assemble_rhs(params: SimParams, layout: BasisLayout) -> SuperOp:
    """Full generator: Hamiltonian commutator plus both dissipators, fused."""
    total = hamiltonian_commutator(params, layout).matrix
    total = total + cavity_dissipator(params.kappa, layout).matrix
    total = total + local_qubit_dissipator(params.gamma, params.N, layout).matrix
    return SuperOp(layout, total)
