import numpy as np
import pytest

from dickesim import (DensityState, SimParams, build_layout, dicke_state,
                      evolve, sector_weights)
from dickesim.oracle import (FullState, expand, full_rhs,
                             permutation_symmetry_residual, symmetrize,
                             _sector_isometries)

from conftest import random_symmetric_state


def test_isometries_orthonormal():
    for n_qubits in (2, 3, 4, 5):
        us = _sector_isometries(n_qubits)
        cols = np.hstack([us[tj] for tj in sorted(us, reverse=True)])
        assert cols.shape == (2 ** n_qubits, 2 ** n_qubits)
        assert np.max(np.abs(cols.T @ cols - np.eye(2 ** n_qubits))) < 1e-12


def test_degeneracy_copy_counts():
    for n_qubits in (2, 3, 4, 5):
        w = sector_weights(n_qubits)
        for tj, u in _sector_isometries(n_qubits).items():
            assert u.shape[1] == w.deg_of(tj) * (tj + 1)


def test_expand_symmetrize_round_trip(rng):
    for n_qubits in (2, 3, 4):
        state = random_symmetric_state(rng, n_qubits)
        back = symmetrize(expand(state))
        assert np.max(np.abs(back.data - state.data)) < 1e-12


def test_expand_preserves_trace_and_degeneracy(rng):
    # a singlet-populated two-qubit state shows its eigenvalue exactly once
    lay = build_layout(2)
    state = DensityState.zeros(lay)
    blk = np.zeros((3, 3), dtype=complex)
    blk[0, 0] = 1.0      # singlet, cavity vacuum
    state.set_block(0, blk)
    full = expand(state)
    assert full.trace().real == pytest.approx(1.0)
    eigs = np.sort(np.linalg.eigvalsh(full.matrix))
    assert eigs[-1] == pytest.approx(1.0)
    assert abs(eigs[-2]) < 1e-12


def test_symmetrize_rejects_asymmetric():
    lay = build_layout(2)
    full = expand(dicke_state(2, 1, lay))
    bad = full.matrix.copy()
    nb = 3
    bad[1 * nb, 1 * nb] += 0.3   # weight on |up,down> alone breaks symmetry
    with pytest.raises(ValueError):
        symmetrize(FullState(2, bad))
    assert permutation_symmetry_residual(FullState(2, bad)) > 0.01


def test_full_rhs_rejects_large_n():
    with pytest.raises(ValueError):
        full_rhs(SimParams(N=6, g=1.0, kappa=0, gamma=0))


def test_full_rhs_single_excitation_rabi():
    params = SimParams(N=1, g=1.0, kappa=0.0, gamma=0.0)
    rho0 = expand(dicke_state(1, 1))
    times = np.array([0.0, 0.4, 1.3])
    traj = evolve(rho0, full_rhs(params), times)
    for t, snap in zip(times, traj.states):
        # |excited, 0 photons> is index 0 in the (spin x boson) ordering
        assert snap.matrix[0, 0].real == pytest.approx(np.cos(t) ** 2,
                                                       abs=1e-9)


def test_full_rhs_trace_preserving(rng):
    params = SimParams(N=3, g=0.8, kappa=0.5, gamma=0.7)
    op = full_rhs(params)
    full = expand(random_symmetric_state(rng, 3))
    deriv = full.replace_data(op(0.0, full.data))
    assert abs(deriv.trace()) < 1e-12
    assert deriv.hermiticity_residual() < 1e-12


def test_per_qubit_exponential_decay():
    # all three qubits excited, local decay only: each relaxes independently
    params = SimParams(N=3, g=0.0, kappa=0.0, gamma=0.9)
    rho0 = expand(dicke_state(3, 3))
    times = np.linspace(0.0, 2.0, 5)
    traj = evolve(rho0, full_rhs(params), times)
    nb = 4
    for t, snap in zip(times, traj.states):
        spin_rho = snap.matrix.reshape(8, nb, 8, nb)[:, 0, :, 0]
        # survival of the fully excited configuration is e^{-3 gamma t}
        assert spin_rho[0, 0].real == pytest.approx(np.exp(-3 * 0.9 * t),
                                                    abs=1e-9)


def test_symmetrize_matches_direct_projection(rng):
    # trace of expand equals flat trace; blocks recover deg * per-copy matrix
    state = random_symmetric_state(rng, 3)
    full = expand(state)
    w = sector_weights(3)
    back = symmetrize(full)
    for tj, block in back.blocks():
        per_copy = state.block(tj) / w.deg_of(tj)
        assert np.max(np.abs(block / w.deg_of(tj) - per_copy)) < 1e-12
