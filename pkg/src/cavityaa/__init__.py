"""Localization of a single lattice atom under an incommensurate cavity potential.

Recoil units throughout: energies in E_r = hbar^2 k0^2 / (2m), lengths in
1/k0, lattice constant a = pi.  The package builds the lowest-band Wannier
basis of the confining lattice, assembles the open-boundary chain with the
cavity-induced arctan onsite potential (or the plain bichromatic cosine
baseline), computes ground states and localization observables, and maps
phase diagrams over the cavity parameters.
"""

from ._version import __version__
from .kernels import active_backend
from .lattice import (GOLDEN_BETA, LATTICE_CONSTANT, BandSolveError, BlochBand,
                      LatticeSpec, WannierBasis, band_tightbinding_residual,
                      build_wannier, cavity_tunneling_corrections,
                      correction_constants, solve_lowest_band,
                      tunneling_from_band, tunneling_from_integral)
from .model import (EffectivePotential, GroundState, GroundStateError,
                    HubbardProblem, OnsiteProfile, TridiagonalOperator,
                    assemble, f_eval, ground_state, onsite_aa, onsite_cavity)
from .observables import (CavityObservables, FitOptions, LocalizationMetrics,
                          PumpField, TransitionEstimate, critical_v_cav,
                          detect_transition, ipr, lyapunov_fit, photon_number,
                          thouless_reference)
from .sweep import (Axis, PumpConfig, SweepRecord, SweepResult, SweepSpec,
                    csv_body, default_filename, export_csv,
                    map_physical_params, read_csv, run_sweep)

__all__ = [
    "__version__", "active_backend",
    "GOLDEN_BETA", "LATTICE_CONSTANT", "BandSolveError", "BlochBand",
    "LatticeSpec", "WannierBasis", "band_tightbinding_residual",
    "build_wannier", "cavity_tunneling_corrections", "correction_constants",
    "solve_lowest_band", "tunneling_from_band", "tunneling_from_integral",
    "EffectivePotential", "GroundState", "GroundStateError", "HubbardProblem",
    "OnsiteProfile", "TridiagonalOperator", "assemble", "f_eval",
    "ground_state", "onsite_aa", "onsite_cavity",
    "CavityObservables", "FitOptions", "LocalizationMetrics", "PumpField",
    "TransitionEstimate", "critical_v_cav", "detect_transition", "ipr",
    "lyapunov_fit", "photon_number", "thouless_reference",
    "Axis", "PumpConfig", "SweepRecord", "SweepResult", "SweepSpec",
    "csv_body", "default_filename", "export_csv", "map_physical_params",
    "read_csv", "run_sweep",
]
