"""Brute-force full-Hilbert-space reference for small systems (N <= 5).

Represents the joint state on the full 2^N * (N+1) dimensional space, builds
the generator directly from per-site operators, and converts to/from the
symmetric representation by explicit angular-momentum coupling.  Used as
ground truth in tests; performance is a non-goal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .basis import BasisLayout, build_layout, sector_weights
from .state import DensityState

__all__ = [
    "MAX_ORACLE_QUBITS",
    "FullState",
    "full_rhs",
    "symmetrize",
    "expand",
    "full_qfi_series",
]

MAX_ORACLE_QUBITS = 5


def _check_size(n_qubits: int) -> None:
    if n_qubits > MAX_ORACLE_QUBITS:
        raise ValueError(
            f"brute-force path is limited to N <= {MAX_ORACLE_QUBITS}")
    if n_qubits < 1:
        raise ValueError("need at least one qubit")


@dataclass
class FullState:
    """Dense density matrix on the joint spin (x) boson space."""

    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        _check_size(self.n_qubits)
        d = self.dim
        self.matrix = np.ascontiguousarray(self.matrix, dtype=np.complex128)
        if self.matrix.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} matrix")

    @property
    def dim(self) -> int:
        return 2 ** self.n_qubits * (self.n_qubits + 1)

    @property
    def data(self) -> np.ndarray:
        return self.matrix.reshape(-1)

    def replace_data(self, data: np.ndarray) -> "FullState":
        return FullState(self.n_qubits, data.reshape(self.dim, self.dim))

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


# ---------------------------------------------------------------------------
# per-site operators and the vectorized generator

_SM = np.array([[0.0, 0.0], [1.0, 0.0]])   # |down><up|
_SZ = np.array([[1.0, 0.0], [0.0, -1.0]])


def _site_op(op: np.ndarray, site: int, n_qubits: int) -> sp.csr_matrix:
    left = sp.identity(2 ** site, format="csr")
    right = sp.identity(2 ** (n_qubits - site - 1), format="csr")
    return sp.kron(sp.kron(left, sp.csr_matrix(op)), right, format="csr")


@lru_cache(maxsize=16)
def _spin_boson_ops(n_qubits: int):
    """(sigma-_j list, S_z, a) on the joint space, boson cutoff = N."""
    nb = n_qubits + 1
    eye_b = sp.identity(nb, format="csr")
    eye_s = sp.identity(2 ** n_qubits, format="csr")
    a_b = sp.csr_matrix(np.diag(np.sqrt(np.arange(1.0, nb)), k=1))
    sms = [sp.kron(_site_op(_SM, j, n_qubits), eye_b, format="csr")
           for j in range(n_qubits)]
    sz = sum(sp.kron(_site_op(_SZ, j, n_qubits), eye_b, format="csr")
             for j in range(n_qubits)) * 0.5
    a = sp.kron(eye_s, a_b, format="csr")
    return sms, sz, a


class FullRhs:
    """Vectorized generator acting on flattened full density matrices."""

    def __init__(self, params, liouvillian: sp.csr_matrix):
        self.params = params
        self.matrix = liouvillian

    def __call__(self, t, y):
        return self.matrix.dot(y)

    def apply(self, y, out=None):
        res = self.matrix.dot(y)
        if out is not None:
            out[:] = res
            return out
        return res


def _left_right(mat_a, mat_b):
    """Superoperator of rho -> A rho B for row-major flattening."""
    return sp.kron(mat_a, mat_b.T, format="csr")


def _dissipator(op: sp.spmatrix) -> sp.csr_matrix:
    eye = sp.identity(op.shape[0], format="csr")
    opd = op.conj().T.tocsr()
    num = (opd @ op).tocsr()
    return (_left_right(op, opd)
            - 0.5 * (_left_right(num, eye) + _left_right(eye, num)))


def full_rhs(params) -> FullRhs:
    """Generator built term by term from per-site jump operators."""
    _check_size(params.N)
    sms, sz, a = _spin_boson_ops(params.N)
    sminus = sum(sms)
    ham = (params.omega_q * sz
           + params.omega_c * (a.conj().T @ a)
           + params.g * (a.conj().T @ sminus + a @ sminus.conj().T))
    eye = sp.identity(ham.shape[0], format="csr")
    liou = -1j * (_left_right(ham, eye) - _left_right(eye, ham))
    liou = liou + params.kappa * _dissipator(a)
    for sm in sms:
        liou = liou + params.gamma * _dissipator(sm)
    return FullRhs(params, liou.tocsr())


# ---------------------------------------------------------------------------
# angular-momentum coupling between the product and collective bases

@lru_cache(maxsize=16)
def _sector_isometries(n_qubits: int):
    """Per-sector isometries U[2J]: product space -> (copy, m-descending).

    Built by coupling one spin-1/2 at a time; each distinct path of
    intermediate spin lengths is one degeneracy copy.
    """
    _check_size(n_qubits)
    up = np.array([1.0, 0.0])
    dn = np.array([0.0, 1.0])
    entries = [(1, {1: up, -1: dn})]
    for k in range(2, n_qubits + 1):
        new = []
        for two_j, vecs in entries:
            dim_prev = 2 ** (k - 1)
            for two_jp in (two_j + 1, two_j - 1):
                if two_jp < 0:
                    continue
                vecs_new = {}
                for two_m in range(-two_jp, two_jp + 1, 2):
                    v = np.zeros(dim_prev * 2)
                    for two_mu, spin_vec in ((1, up), (-1, dn)):
                        two_mp = two_m - two_mu
                        if abs(two_mp) > two_j:
                            continue
                        j, m = two_j / 2.0, two_m / 2.0
                        if two_jp == two_j + 1:
                            c = math.sqrt((j + two_mu * m + 0.5) / (2 * j + 1))
                        else:
                            c = -two_mu * math.sqrt(
                                (j - two_mu * m + 0.5) / (2 * j + 1))
                        if c:
                            v += c * np.kron(vecs[two_mp], spin_vec)
                    vecs_new[two_m] = v
                new.append((two_jp, vecs_new))
        entries = new

    weights = sector_weights(n_qubits)
    isometries = {}
    for two_j in weights.two_j:
        cols = []
        for tj, vecs in entries:
            if tj != two_j:
                continue
            for two_m in range(two_j, -two_j - 1, -2):  # m descending
                cols.append(vecs[two_m])
        u = np.array(cols).T  # (2^N, deg * (2J+1)), copy-major columns
        assert u.shape[1] == weights.deg_of(two_j) * (two_j + 1)
        isometries[two_j] = u
    return isometries


def _swap_permutation(n_qubits: int, site: int) -> np.ndarray:
    """Index permutation of the product spin basis swapping site and site+1."""
    idx = np.arange(2 ** n_qubits)
    hi = (idx >> (n_qubits - 1 - site)) & 1
    lo = (idx >> (n_qubits - 2 - site)) & 1
    swapped = idx & ~((1 << (n_qubits - 1 - site)) | (1 << (n_qubits - 2 - site)))
    swapped |= lo << (n_qubits - 1 - site)
    swapped |= hi << (n_qubits - 2 - site)
    return swapped


def permutation_symmetry_residual(full: FullState) -> float:
    """max deviation of rho from invariance under adjacent spin swaps."""
    n = full.n_qubits
    nb = n + 1
    rho4 = full.matrix.reshape(2 ** n, nb, 2 ** n, nb)
    worst = 0.0
    for site in range(n - 1):
        perm = _swap_permutation(n, site)
        diff = rho4[perm][:, :, perm] - rho4
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def symmetrize(full: FullState, layout: BasisLayout = None,
               tol: float = 1e-10) -> DensityState:
    """Project a permutation-invariant full state onto the flattened basis.

    The stored block for sector J sums over all degeneracy copies, so the
    flat trace equals the full trace.  Rejects states that are not actually
    permutation symmetric.
    """
    n = full.n_qubits
    if layout is None:
        layout = build_layout(n)
    res = permutation_symmetry_residual(full)
    if res > tol:
        raise ValueError(f"state is not permutation symmetric "
                         f"(swap residual {res:.3e} > {tol:.1e})")
    nb = n + 1
    rho4 = full.matrix.reshape(2 ** n, nb, 2 ** n, nb)
    weights = sector_weights(n)
    out = DensityState.zeros(layout)
    for two_j, u in _sector_isometries(n).items():
        d = weights.deg_of(two_j)
        b = two_j + 1
        t = np.einsum("sa,slzk,zb->albk", u.conj(), rho4, u, optimize=True)
        t6 = t.reshape(d, b, nb, d, b, nb)
        block = np.einsum("cnlcmk->nlmk", t6)
        out.set_block(two_j, block.reshape(b * nb, b * nb))
    return out


def full_qfi_series(probe, params, times, cfg=None, int_cfg=None) -> np.ndarray:
    """QFI(t) computed entirely on the full Hilbert space.

    Shares the integrator and the eigenvalue-thresholding code with the
    symmetric-basis pipeline, so any disagreement isolates the basis and
    dissipator mathematics.  times is in g*t units.
    """
    from .evolve import IntegratorConfig, evolve
    from .fisher import QfiConfig, qfi_from_pairs
    from .operators import SimParams
    from .probes import probe_state

    cfg = cfg or QfiConfig()
    int_cfg = int_cfg or IntegratorConfig()
    _check_size(params.N)
    times = np.asarray(times, dtype=float)
    rho0 = expand(probe_state(probe))
    delta_abs = cfg.delta * params.g
    t_abs = times / params.g
    trajs = {}
    for sign in (+1, -1):
        shifted = SimParams(N=params.N, g=params.g + sign * delta_abs / 2.0,
                            kappa=params.kappa, gamma=params.gamma,
                            omega_q=params.omega_q, omega_c=params.omega_c)
        trajs[sign] = evolve(rho0, full_rhs(shifted), t_abs, int_cfg)
    f = np.empty(times.size)
    for i in range(times.size):
        pair = [(trajs[+1].states[i].matrix, trajs[-1].states[i].matrix)]
        f[i] = qfi_from_pairs(pair, delta_abs, cfg)
    return f


def expand(sym: DensityState) -> FullState:
    """Inverse of symmetrize: distribute each J-block uniformly over its
    degeneracy copies with weight 1/deg(J) per copy."""
    n = sym.layout.n_qubits
    _check_size(n)
    nb = n + 1
    weights = sector_weights(n)
    rho4 = np.zeros((2 ** n, nb, 2 ** n, nb), dtype=np.complex128)
    for two_j, u in _sector_isometries(n).items():
        d = weights.deg_of(two_j)
        b = two_j + 1
        block = sym.block(two_j).reshape(b, nb, b, nb) / d
        for c in range(d):
            uc = u[:, c * b:(c + 1) * b]
            rho4 += np.einsum("sn,nlmk,zm->slzk", uc, block, uc.conj(),
                              optimize=True)
    return FullState(n, rho4.reshape(2 ** n * nb, 2 ** n * nb))
