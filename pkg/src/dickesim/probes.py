"""Initial probe states: Dicke, X-polarized and GHZ, resonator in vacuum.

All probes are pure states supported entirely in the fully symmetric sector
J = N/2 with zero photons, so they occupy the leading block of the layout.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .basis import BasisLayout, build_layout
from .state import DensityState

__all__ = [
    "ProbeSpec",
    "parse_probe",
    "dicke_state",
    "x_polarized_state",
    "ghz_state",
    "probe_state",
]

_PROBE_RE = re.compile(r"^dicke-(\d+)$")


@dataclass(frozen=True)
class ProbeSpec:
    """A probe family member: kind in {'dicke', 'x-polarized', 'ghz'}."""

    kind: str
    N: int
    n: int = None

    def __post_init__(self):
        if self.kind not in ("dicke", "x-polarized", "ghz"):
            raise ValueError(f"unknown probe kind {self.kind!r}")
        if self.kind == "dicke":
            if self.n is None or not 0 <= self.n <= self.N:
                raise ValueError(
                    f"dicke excitation number must be in 0..{self.N}, got {self.n}")
        elif self.n is not None:
            raise ValueError(f"probe {self.kind!r} takes no excitation number")
        if self.kind == "ghz" and self.N < 2:
            raise ValueError("ghz probe needs at least two qubits")

    def label(self) -> str:
        return f"dicke-{self.n}" if self.kind == "dicke" else self.kind

    def excitation_bound(self) -> int:
        """Largest total excitation (up spins + photons) the probe populates.

        Dynamics never raise it, so states stay in this excitation sector.
        """
        return self.n if self.kind == "dicke" else self.N


def parse_probe(text: str, N: int) -> ProbeSpec:
    """Parse CLI probe names: dicke-<n>, dicke-half, x-polarized, ghz."""
    text = text.strip().lower()
    if text in ("x-polarized", "ghz"):
        return ProbeSpec(kind=text, N=N)
    if text == "dicke-half":
        return ProbeSpec(kind="dicke", N=N, n=N // 2)
    m = _PROBE_RE.match(text)
    if m:
        return ProbeSpec(kind="dicke", N=N, n=int(m.group(1)))
    raise ValueError(f"unknown probe {text!r} "
                     "(expected dicke-<n>, dicke-half, x-polarized or ghz)")


def _vacuum_pure(layout: BasisLayout, amplitudes: dict) -> DensityState:
    """Pure spin state in the J = N/2 sector, given {two_m: amplitude}."""
    state = DensityState.zeros(layout)
    tj = layout.n_qubits
    for two_n, cn in amplitudes.items():
        for two_m, cm in amplitudes.items():
            i = layout.spin_index(tj, two_n, two_m)
            state.data[layout.full_index(i, 0, 0)] = cn * np.conj(cm)
    return state


def dicke_state(N: int, n: int, layout: BasisLayout = None) -> DensityState:
    """|J=N/2, m=n-N/2> tensor vacuum: equal-weight superposition of all
    N-qubit configurations with exactly n excitations."""
    if not 0 <= n <= N:
        raise ValueError(f"excitation number must be in 0..{N}, got {n}")
    layout = layout or build_layout(N)
    return _vacuum_pure(layout, {2 * n - N: 1.0})


def x_polarized_state(N: int, layout: BasisLayout = None) -> DensityState:
    """Product state of N qubits polarized along +x, in the collective basis.

    Amplitude on |N/2, m> is sqrt(C(N, N/2+m) / 2^N); the binomial weights
    sum to one exactly.
    """
    layout = layout or build_layout(N)
    amps = {}
    for two_m in range(N, -N - 1, -2):
        amps[two_m] = math.sqrt(math.comb(N, (N + two_m) // 2) / 2.0 ** N)
    return _vacuum_pure(layout, amps)


def ghz_state(N: int, layout: BasisLayout = None) -> DensityState:
    """(|N/2, N/2> + |N/2, -N/2>)/sqrt(2) tensor vacuum; needs N >= 2."""
    if N < 2:
        raise ValueError("ghz state needs at least two qubits")
    layout = layout or build_layout(N)
    r = 1.0 / math.sqrt(2.0)
    return _vacuum_pure(layout, {N: r, -N: r})


def probe_state(spec: ProbeSpec, layout: BasisLayout = None) -> DensityState:
    if spec.kind == "dicke":
        return dicke_state(spec.N, spec.n, layout)
    if spec.kind == "x-polarized":
        return x_polarized_state(spec.N, layout)
    return ghz_state(spec.N, layout)
