"""Quantum Fisher information of the coupling, from finite-difference pairs.

F is evaluated from two trajectories at couplings g +- delta*g/2 via
F = 2 sum_{a,b} |<a| drho |b>|^2 / (lambda_a + lambda_b), with eigenpairs
taken from the midpoint state (rho_+ + rho_-)/2.  The representation is block
diagonal in the total spin length, eigenproblems are solved per block, and
cross-block pair terms vanish identically.

Floating-point stabilization: the magnitude of the most negative eigenvalue
sets the error scale eps; eigenvalues below err_multiplier * eps are zeroed,
and pairs only contribute when lambda_a + lambda_b exceeds pair_floor.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .basis import build_layout
from .evolve import IntegratorConfig, iter_states
from .operators import SimParams, assemble_rhs
from .probes import ProbeSpec, probe_state
from .state import DensityState
from .subspace import SubspaceState, excitation_indices, restrict_superop

__all__ = ["QfiConfig", "QfiSeries", "qfi_at", "qfi_from_pairs", "qfi_series",
           "PairEvolver"]


@dataclass(frozen=True)
class QfiConfig:
    """Finite-difference step (relative to g) and stabilization thresholds."""

    delta: float = 1e-3
    err_multiplier: float = 10.0
    pair_floor: float = 1e-8

    def __post_init__(self):
        if not 0 < self.delta < 0.5:
            raise ValueError(f"delta must be small and positive, got {self.delta}")


def qfi_from_pairs(pairs, delta: float, cfg: QfiConfig = QfiConfig()) -> float:
    """QFI from (plus, minus) matrix pairs, one per diagonal block.

    Each pair holds the same block of the states evolved at g + delta/2 and
    g - delta/2 (delta here is the absolute step).  Rows and columns that are
    exactly zero in both matrices are pruned before the eigendecomposition;
    they correspond to exact zero eigenvalues and contribute nothing.
    """
    lams, mats = [], []
    saw_pruned = False
    for plus, minus in pairs:
        plus = np.asarray(plus)
        minus = np.asarray(minus)
        live = (np.abs(plus) + np.abs(minus))
        active = np.nonzero(live.any(axis=0) | live.any(axis=1))[0]
        if active.size < plus.shape[0]:
            saw_pruned = True
        if active.size == 0:
            continue
        sel = np.ix_(active, active)
        p, m = plus[sel], minus[sel]
        mid = 0.25 * (p + m)
        mid = mid + mid.conj().T
        lam, vec = np.linalg.eigh(mid)
        if not np.all(np.isfinite(lam)):
            raise FloatingPointError("non-finite eigenvalues in QFI block")
        dr = (p - m) / delta
        lams.append(lam)
        mats.append(vec.conj().T @ dr @ vec)
    if not lams:
        return 0.0

    min_eig = min(float(lam[0]) for lam in lams)
    if saw_pruned:
        min_eig = min(min_eig, 0.0)
    eps = max(0.0, -min_eig)

    total = 0.0
    for lam, m in zip(lams, mats):
        lam = np.where(lam < cfg.err_multiplier * eps, 0.0, lam)
        den = lam[:, None] + lam[None, :]
        mask = den > cfg.pair_floor
        if np.any(mask):
            total += 2.0 * float(np.sum(np.abs(m[mask]) ** 2 / den[mask]))
    return total


def qfi_at(rho_plus: DensityState, rho_minus: DensityState,
           cfg: QfiConfig = QfiConfig(), delta: float = None) -> float:
    """QFI from one matched pair of symmetric-basis states.

    delta is the absolute coupling step between the two trajectories;
    defaults to cfg.delta (exact when the nominal coupling is 1).
    """
    if rho_plus.layout is not rho_minus.layout:
        raise ValueError("states must share a layout")
    if delta is None:
        delta = cfg.delta
    pairs = ((rho_plus.block(tj), rho_minus.block(tj))
             for tj in sorted(rho_plus.layout.sector_offset, reverse=True))
    return qfi_from_pairs(pairs, delta, cfg)


@dataclass
class QfiSeries:
    """F(t) on a dimensionless time grid, with scaled variants and peak info.

    times holds g*t; f is the QFI with respect to g; f_scaled = f * g**2 is
    invariant under the rescaling g -> 1; f_over_t = f / t (zero at t = 0).
    """

    times: np.ndarray
    f: np.ndarray
    f_scaled: np.ndarray
    f_over_t: np.ndarray
    peak_time: float
    peak_value: float
    probe: str = ""
    params: dict = field(default_factory=dict)

    def values(self, objective: str) -> np.ndarray:
        """Objective samples in scaled units: 'f' or 'f_over_t'."""
        if objective == "f":
            return self.f_scaled
        if objective == "f_over_t":
            out = np.zeros_like(self.f_scaled)
            nz = self.times > 0
            out[nz] = self.f_scaled[nz] / self.times[nz]
            return out
        raise ValueError(f"unknown objective {objective!r}")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write("gt,F,F_g2,F_over_t\n")
            for row in zip(self.times, self.f, self.f_scaled, self.f_over_t):
                fh.write(",".join(f"{x:.17g}" for x in row) + "\n")

    def to_json(self, path) -> None:
        payload = {
            "probe": self.probe,
            "params": self.params,
            "peak_time": self.peak_time,
            "peak_value": self.peak_value,
            "times": self.times.tolist(),
            "f": self.f.tolist(),
            "f_scaled": self.f_scaled.tolist(),
            "f_over_t": self.f_over_t.tolist(),
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True)

    @classmethod
    def from_json(cls, path) -> "QfiSeries":
        with open(path) as fh:
            payload = json.load(fh)
        return cls(
            times=np.asarray(payload["times"]),
            f=np.asarray(payload["f"]),
            f_scaled=np.asarray(payload["f_scaled"]),
            f_over_t=np.asarray(payload["f_over_t"]),
            peak_time=payload["peak_time"],
            peak_value=payload["peak_value"],
            probe=payload.get("probe", ""),
            params=payload.get("params", {}),
        )


class PairEvolver:
    """The two trajectories at g +- delta/2, streamed side by side.

    The pair shares the probe's initial state and differs only in the
    coupling; both run on the excitation-bounded subspace the probe admits
    (an exact truncation, see subspace module) unless restrict=False.
    """

    def __init__(self, probe: ProbeSpec, params: SimParams,
                 cfg: QfiConfig = QfiConfig(),
                 int_cfg: IntegratorConfig = IntegratorConfig(),
                 layout=None, restrict: bool = True):
        if params.g <= 0:
            raise ValueError("QFI with respect to g requires g > 0")
        if probe.N != params.N:
            raise ValueError("probe and params disagree on N")
        self.params = params
        self.cfg = cfg
        self.int_cfg = int_cfg
        self.delta_abs = cfg.delta * params.g
        layout = layout or build_layout(params.N)
        rho0 = probe_state(probe, layout)

        bound = probe.excitation_bound()
        self.restricted = (restrict and
                           excitation_indices(layout, bound).size
                           < layout.total_dim)
        self.rhs = {}
        for sign in (+1, -1):
            g_shift = params.g + sign * self.delta_abs / 2.0
            full_op = assemble_rhs(
                SimParams(N=params.N, g=g_shift, kappa=params.kappa,
                          gamma=params.gamma, omega_q=params.omega_q,
                          omega_c=params.omega_c), layout)
            self.rhs[sign] = (restrict_superop(full_op, bound)
                              if self.restricted else full_op)
        self.initial = (SubspaceState.from_full(rho0, bound)
                        if self.restricted else rho0)

    def stream(self, t_abs, start=None):
        """Yield (t, state_plus, state_minus) at each time of t_abs.

        Both trajectories begin at the probe state at t = 0; a grid starting
        later is integrated through silently.  start optionally supplies a
        (t0, plus, minus) checkpoint in the evolver's internal
        representation, and t_abs must then begin at t0.
        """
        t_abs = np.asarray(t_abs, dtype=float)
        skip_first = False
        if start is None:
            above0 = below0 = self.initial
            if t_abs.size and t_abs[0] > 0.0:
                t_abs = np.concatenate([[0.0], t_abs])
                skip_first = True
        else:
            t0, above0, below0 = start
            if t_abs[0] != t0:
                raise ValueError("grid must start at the checkpoint time")
        pair = zip(iter_states(above0, self.rhs[+1], t_abs, self.int_cfg),
                   iter_states(below0, self.rhs[-1], t_abs, self.int_cfg))
        for i, ((t, above), (_, below)) in enumerate(pair):
            if skip_first and i == 0:
                continue
            yield t, above, below

    def as_full(self, state) -> DensityState:
        return state.to_full() if self.restricted else state

    def qfi(self, above, below) -> float:
        """QFI with respect to g from one matched pair of stream states."""
        return qfi_at(self.as_full(above), self.as_full(below), self.cfg,
                      delta=self.delta_abs)


def qfi_series(probe: ProbeSpec, params: SimParams, times,
               cfg: QfiConfig = QfiConfig(),
               int_cfg: IntegratorConfig = IntegratorConfig(),
               layout=None, restrict: bool = True) -> QfiSeries:
    """Evolve the g +- delta/2 pair and evaluate the QFI on the time grid.

    times is in g*t units.  The two trajectories run concurrently in a
    streaming fashion so full trajectories are never held in memory.
    """
    times = np.asarray(times, dtype=float)
    evolver = PairEvolver(probe, params, cfg, int_cfg, layout, restrict)
    t_abs = times / params.g
    f = np.zeros(times.size)
    for i, (_, above, below) in enumerate(evolver.stream(t_abs)):
        f[i] = evolver.qfi(above, below)

    f_scaled = f * params.g ** 2
    f_over_t = np.zeros_like(f)
    nz = t_abs > 0
    f_over_t[nz] = f[nz] / t_abs[nz]
    ipk = int(np.argmax(f_scaled))
    return QfiSeries(
        times=times, f=f, f_scaled=f_scaled, f_over_t=f_over_t,
        peak_time=float(times[ipk]), peak_value=float(f_scaled[ipk]),
        probe=probe.label(),
        params={"N": params.N, "g": params.g, "kappa": params.kappa,
                "gamma": params.gamma, "omega_q": params.omega_q,
                "omega_c": params.omega_c, "delta": cfg.delta,
                "rtol": int_cfg.rtol, "atol": int_cfg.atol},
    )
