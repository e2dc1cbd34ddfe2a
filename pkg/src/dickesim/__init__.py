"""Permutation-symmetric simulation of lossy qubit-cavity dynamics and the
quantum Fisher information of the qubit-cavity coupling."""

from ._apply import using_compiled_kernels
from .basis import (BasisLayout, SectorWeights, SpinTriple, build_layout,
                    sector_weights, spin_lengths)
from .evolve import (IntegratorConfig, IntegrationError, Trajectory,
                     dimensionless_rescale, evolve, iter_states)
from .fisher import QfiConfig, QfiSeries, qfi_at, qfi_series
from .metrology import (DickeScan, ExponentMap, FitError, PeakResult,
                        ScalingFit, default_time_grid, dicke_excitation_scan,
                        exponent_map, find_peak, refine_peak, scaling_fit)
from .operators import (SimParams, SuperOp, assemble_rhs, boson_left_right,
                        cavity_dissipator, hamiltonian_commutator,
                        local_qubit_dissipator, spin_matrix_elements)
from .probes import (ProbeSpec, dicke_state, ghz_state, parse_probe,
                     probe_state, x_polarized_state)
from .state import DensityState

__version__ = "0.1.0"

__all__ = [
    "BasisLayout", "SectorWeights", "SpinTriple", "build_layout",
    "sector_weights", "spin_lengths",
    "DensityState",
    "SimParams", "SuperOp", "assemble_rhs", "boson_left_right",
    "cavity_dissipator", "hamiltonian_commutator", "local_qubit_dissipator",
    "spin_matrix_elements",
    "IntegratorConfig", "IntegrationError", "Trajectory",
    "dimensionless_rescale", "evolve", "iter_states",
    "ProbeSpec", "dicke_state", "ghz_state", "parse_probe", "probe_state",
    "x_polarized_state",
    "QfiConfig", "QfiSeries", "qfi_at", "qfi_series",
    "DickeScan", "ExponentMap", "FitError", "PeakResult", "ScalingFit",
    "default_time_grid", "dicke_excitation_scan", "exponent_map", "find_peak",
    "refine_peak", "scaling_fit",
    "using_compiled_kernels",
    "__version__",
]
