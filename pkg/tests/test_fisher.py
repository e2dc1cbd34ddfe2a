import json

import numpy as np
import pytest

from dickesim import (ProbeSpec, QfiConfig, QfiSeries, SimParams,
                      build_layout, qfi_at, qfi_series)
from dickesim.fisher import qfi_from_pairs
from dickesim import oracle

from conftest import random_symmetric_state


def test_equal_states_give_zero(rng):
    state = random_symmetric_state(rng, 2)
    assert qfi_at(state, state) == 0.0


def test_layout_mismatch_rejected(rng):
    a = random_symmetric_state(rng, 2)
    b = random_symmetric_state(rng, 3)
    with pytest.raises(ValueError):
        qfi_at(a, b)


def test_block_eigensystem_reconstruction(rng):
    # eigh output reconstructs each block to near machine precision
    state = random_symmetric_state(rng, 3)
    for tj, block in state.blocks():
        lam, vec = np.linalg.eigh(block)
        rebuilt = (vec * lam) @ vec.conj().T
        assert np.max(np.abs(rebuilt - block)) < 1e-10


def test_rabi_qfi_quadratic():
    # single qubit, closed dynamics: F(t) = 4 t^2
    times = np.array([0.5, 1.0, 2.0])
    probe = ProbeSpec(kind="dicke", N=1, n=1)
    params = SimParams(N=1, g=1.0, kappa=0.0, gamma=0.0)
    series = qfi_series(probe, params, times, QfiConfig(delta=1e-4))
    expected = 4.0 * times ** 2
    assert np.max(np.abs(series.f - expected) / expected) < 1e-6


def test_finite_difference_bias_scales_with_delta():
    # central differences carry a -(delta*t)^2/3 relative bias; halving
    # delta quarters it
    times = np.array([2.0])
    probe = ProbeSpec(kind="dicke", N=1, n=1)
    params = SimParams(N=1, g=1.0, kappa=0.0, gamma=0.0)
    errs = []
    for delta in (2e-3, 1e-3):
        series = qfi_series(probe, params, times, QfiConfig(delta=delta))
        errs.append(abs(series.f[0] - 16.0) / 16.0)
    assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)


def test_oracle_match_two_qubits():
    probe = ProbeSpec(kind="dicke", N=2, n=1)
    params = SimParams(N=2, g=1.0, kappa=0.2, gamma=0.6)
    times = np.linspace(0.0, 8.0, 17)
    series = qfi_series(probe, params, times)
    f_full = oracle.full_qfi_series(probe, params, times)
    live = f_full > 1e-6
    rel = np.abs(series.f - f_full)[live] / f_full[live]
    assert np.max(rel) < 1e-6
    # in particular at the grid peak
    ipk = int(np.argmax(series.f))
    assert live[ipk]


@pytest.mark.parametrize("n_qubits", (2, 3, 4))
def test_representation_invariance_with_decay(n_qubits):
    # gamma > 0 populates J < N/2 sectors; QFI agrees with the full space,
    # which is what makes the block-degeneracy bookkeeping correct.  The
    # 1e-6 bound needs integration error below the 1/delta amplification,
    # hence the tightened tolerances.
    from dickesim import IntegratorConfig

    probe = ProbeSpec(kind="dicke", N=n_qubits, n=1)
    params = SimParams(N=n_qubits, g=1.0, kappa=0.1, gamma=0.8)
    times = np.linspace(0.0, 6.0, 7)
    icfg = IntegratorConfig(rtol=1e-11, atol=1e-11)
    series = qfi_series(probe, params, times, int_cfg=icfg)
    f_full = oracle.full_qfi_series(probe, params, times, int_cfg=icfg)
    live = f_full > 1e-6
    assert np.max(np.abs(series.f - f_full)[live] / f_full[live]) < 1e-6


def test_delta_robustness_n5():
    probe = ProbeSpec(kind="dicke", N=5, n=2)
    params = SimParams(N=5, g=1.0, kappa=0.2, gamma=0.6)
    times = np.linspace(0.0, 12.0, 61)
    base = qfi_series(probe, params, times, QfiConfig(delta=1e-3))
    half = qfi_series(probe, params, times, QfiConfig(delta=5e-4))
    ipk = int(np.argmax(base.f))
    assert abs(base.f[ipk] - half.f[ipk]) / base.f[ipk] < 1e-3


def test_nonnegative(rng):
    probe = ProbeSpec(kind="ghz", N=3)
    params = SimParams(N=3, g=1.0, kappa=1.0, gamma=1.0)
    times = np.linspace(0.0, 10.0, 21)
    series = qfi_series(probe, params, times)
    assert np.all(series.f >= -1e-10)
    assert series.f[0] == 0.0


def test_scaling_consistency_across_g():
    # F(g=2, t=1) * 4 equals F(coupling 1) at the same g*t
    probe = ProbeSpec(kind="dicke", N=3, n=1)
    times = np.array([2.0])   # g*t
    high = qfi_series(probe, SimParams(N=3, g=2.0, kappa=0.4, gamma=1.2),
                      times)
    unit = qfi_series(probe, SimParams(N=3, g=1.0, kappa=0.2, gamma=0.6),
                      times)
    assert high.f_scaled[0] == pytest.approx(unit.f_scaled[0], rel=1e-6)
    assert high.f[0] * 4.0 == pytest.approx(unit.f[0], rel=1e-6)


def test_restricted_matches_unrestricted():
    probe = ProbeSpec(kind="dicke", N=4, n=2)
    params = SimParams(N=4, g=1.0, kappa=0.3, gamma=0.5)
    times = np.linspace(0.0, 6.0, 13)
    a = qfi_series(probe, params, times, restrict=True)
    b = qfi_series(probe, params, times, restrict=False)
    scale = np.maximum(np.abs(b.f), 1.0)
    assert np.max(np.abs(a.f - b.f) / scale) < 1e-6


def test_thresholding_drops_noise_eigenvalues():
    # one clean block plus a block that is pure negative-eigenvalue noise:
    # the noise block must not contribute
    rng = np.random.default_rng(7)
    psi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    psi /= np.linalg.norm(psi)
    dpsi = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    delta = 1e-3
    plus = np.outer(psi + delta / 2 * dpsi, (psi + delta / 2 * dpsi).conj())
    minus = np.outer(psi - delta / 2 * dpsi, (psi - delta / 2 * dpsi).conj())
    noise = -1e-14 * np.eye(2)
    f_clean = qfi_from_pairs([(plus, minus)], delta)
    f_noisy = qfi_from_pairs([(plus, minus), (noise, noise)], delta)
    assert f_noisy == pytest.approx(f_clean, rel=1e-9)


def test_pair_floor_applies():
    # two exactly-zero eigenvalues with a nonzero derivative element between
    # them are excluded by the pair floor
    delta = 1e-3
    zero = np.zeros((2, 2))
    dr = np.array([[0.0, 1.0], [1.0, 0.0]]) * delta
    plus, minus = dr / 2, -dr / 2
    assert qfi_from_pairs([(plus, minus)], delta) == 0.0


def test_series_csv_json_round_trip(tmp_path):
    probe = ProbeSpec(kind="dicke", N=2, n=1)
    params = SimParams(N=2, g=1.0, kappa=0.2, gamma=0.6)
    times = np.linspace(0.0, 3.0, 7)
    series = qfi_series(probe, params, times)

    csv_path = tmp_path / "series.csv"
    series.to_csv(csv_path)
    header, *rows = csv_path.read_text().strip().split("\n")
    assert header == "gt,F,F_g2,F_over_t"
    assert len(rows) == times.size
    parsed = np.array([[float(v) for v in row.split(",")] for row in rows])
    assert np.array_equal(parsed[:, 0], times)
    assert np.array_equal(parsed[:, 1], series.f)

    json_path = tmp_path / "series.json"
    series.to_json(json_path)
    loaded = QfiSeries.from_json(json_path)
    assert np.array_equal(loaded.f, series.f)
    assert loaded.probe == "dicke-1"
    assert loaded.params["kappa"] == 0.2
    payload = json.loads(json_path.read_text())
    assert payload["params"]["rtol"] == 1e-10
