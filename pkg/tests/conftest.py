import numpy as np
import pytest

from dickesim import DensityState, build_layout, sector_weights


@pytest.fixture
def rng():
    return np.random.default_rng(20230817)


def random_symmetric_state(rng, n_qubits):
    """Random Hermitian PSD trace-1 state in the flattened basis."""
    layout = build_layout(n_qubits)
    weights = sector_weights(n_qubits)
    state = DensityState.zeros(layout)
    probs = rng.dirichlet(np.ones(len(weights.two_j)))
    for p, tj in zip(probs, weights.two_j):
        b = (tj + 1) * (layout.boson_cutoff + 1)
        m = rng.standard_normal((b, b)) + 1j * rng.standard_normal((b, b))
        blk = m @ m.conj().T
        state.set_block(tj, p * blk / np.trace(blk).real)
    return state


def random_hermitian_state(rng, n_qubits):
    """Random Hermitian (not necessarily positive) trace-1 flattened state."""
    layout = build_layout(n_qubits)
    state = DensityState.zeros(layout)
    for tj in layout.sector_offset:
        b = (tj + 1) * (layout.boson_cutoff + 1)
        m = rng.standard_normal((b, b)) + 1j * rng.standard_normal((b, b))
        state.set_block(tj, m + m.conj().T)
    tr = state.trace().real
    state.data /= tr
    return state
