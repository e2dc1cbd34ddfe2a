import math

import numpy as np
import pytest

from dickesim import (ProbeSpec, build_layout, dicke_state, ghz_state,
                      parse_probe, probe_state, x_polarized_state)
from dickesim import oracle


def test_dicke_single_component():
    lay = build_layout(4)
    state = dicke_state(4, 1, lay)
    i = lay.spin_index(4, -2, -2)          # J=2, n=m=-1
    assert state.data[lay.full_index(i, 0, 0)] == 1.0
    assert np.count_nonzero(state.data) == 1
    assert state.trace() == 1.0


def test_dicke_top_state():
    lay = build_layout(2)
    state = dicke_state(2, 2, lay)
    i = lay.spin_index(2, 2, 2)            # J=1, m=1
    assert state.data[lay.full_index(i, 0, 0)] == 1.0


def test_dicke_range_check():
    with pytest.raises(ValueError):
        dicke_state(3, 4)
    with pytest.raises(ValueError):
        dicke_state(3, -1)


def test_dicke_expansion_is_w_state():
    # N=3 single excitation: uniform 1/sqrt(3) amplitudes over the three
    # one-excitation configurations
    state = dicke_state(3, 1)
    full = oracle.expand(state).matrix
    nb = 4
    spin_rho = full.reshape(8, nb, 8, nb)[:, 0, :, 0]
    w_amp = np.zeros(8)
    for config in (0b100, 0b010, 0b001):
        # bit set = excited qubit; basis index with up=0, down=1 convention
        w_amp[config ^ 0b111] = 1 / math.sqrt(3)
    expected = np.outer(w_amp, w_amp)
    assert np.max(np.abs(spin_rho - expected)) < 1e-12


def test_x_polarized_amplitudes():
    lay = build_layout(2)
    state = x_polarized_state(2, lay)
    # amplitudes (1/2, 1/sqrt2, 1/2) on m = 1, 0, -1
    amp = {2: 0.5, 0: 1 / math.sqrt(2), -2: 0.5}
    for tn, cn in amp.items():
        for tm, cm in amp.items():
            i = lay.spin_index(2, tn, tm)
            assert state.data[lay.full_index(i, 0, 0)] == pytest.approx(cn * cm)


@pytest.mark.parametrize("n_qubits", [1, 2, 5, 17, 30])
def test_x_polarized_normalized(n_qubits):
    total = sum(math.comb(n_qubits, k) / 2.0 ** n_qubits
                for k in range(n_qubits + 1))
    assert total == pytest.approx(1.0, abs=1e-14)
    if n_qubits <= 17:
        state = x_polarized_state(n_qubits)
        assert state.trace().real == pytest.approx(1.0, abs=1e-12)
        assert state.purity() == pytest.approx(1.0, abs=1e-12)


def test_x_polarized_single_qubit_is_plus():
    lay = build_layout(1)
    state = x_polarized_state(1, lay)
    r = 1 / math.sqrt(2)
    for tn in (1, -1):
        for tm in (1, -1):
            i = lay.spin_index(1, tn, tm)
            assert state.data[lay.full_index(i, 0, 0)] == pytest.approx(r * r)


def test_ghz_components():
    lay = build_layout(2)
    state = ghz_state(2, lay)
    vals = []
    for tn in (2, -2):
        for tm in (2, -2):
            i = lay.spin_index(2, tn, tm)
            vals.append(state.data[lay.full_index(i, 0, 0)])
    assert np.allclose(vals, 0.5)
    assert np.count_nonzero(state.data) == 4
    assert state.trace().real == pytest.approx(1.0)
    assert state.purity() == pytest.approx(1.0)


def test_ghz_oracle_expansion():
    state = ghz_state(2)
    full = oracle.expand(state).matrix
    nb = 3
    spin_rho = full.reshape(4, nb, 4, nb)[:, 0, :, 0]
    # (|00> + |11>)/sqrt2 with up=0, down=1 ordering: indices 0 and 3
    amp = np.zeros(4)
    amp[0] = amp[3] = 1 / math.sqrt(2)
    assert np.max(np.abs(spin_rho - np.outer(amp, amp))) < 1e-12


def test_ghz_needs_two_qubits():
    with pytest.raises(ValueError):
        ghz_state(1)


def test_probes_supported_in_top_sector_only():
    for spec in (ProbeSpec("dicke", 4, 2), ProbeSpec("x-polarized", 4),
                 ProbeSpec("ghz", 4)):
        state = probe_state(spec)
        lay = state.layout
        for tj, block in state.blocks():
            if tj != lay.n_qubits:
                assert np.max(np.abs(block)) == 0.0
        # photon side in vacuum
        cube = state.data.reshape(lay.spin_dim, 5, 5)
        assert np.max(np.abs(cube[:, 1:, :])) == 0.0
        assert np.max(np.abs(cube[:, :, 1:])) == 0.0


def test_parse_probe():
    assert parse_probe("dicke-3", 5) == ProbeSpec("dicke", 5, 3)
    assert parse_probe("dicke-half", 9) == ProbeSpec("dicke", 9, 4)
    assert parse_probe("x-polarized", 4) == ProbeSpec("x-polarized", 4)
    assert parse_probe("ghz", 4) == ProbeSpec("ghz", 4)
    with pytest.raises(ValueError):
        parse_probe("bell", 4)
    with pytest.raises(ValueError):
        parse_probe("dicke-9", 4)


def test_excitation_bound():
    assert ProbeSpec("dicke", 8, 3).excitation_bound() == 3
    assert ProbeSpec("x-polarized", 8).excitation_bound() == 8
    assert ProbeSpec("ghz", 8).excitation_bound() == 8
