"""
GHZ-state generation on a qutrit-resonator chain

This package simulates the transfer of a single excitation through the
zero-energy edge mode of an SSH-type qutrit-resonator chain, the resulting
N-body GHZ state, and its robustness to disorder and decay.
"""

__version__ = "0.1.0"

from .models import (
    REFERENCE_FIT,
    AnalyticEdgeState,
    ChainSpec,
    ControlField,
    ControlMode,
    CouplingProfile,
    DisorderRealization,
    EvolutionTrace,
    FitResult,
    HamiltonianMatrix,
    RunManifest,
    ScaleStudyConfig,
    Scheme,
    SiteKind,
    SiteLabel,
    SpectrumResult,
    StateVector,
    SubspaceBasis,
    SweepResult,
)
from .chain import (
    apply_disorder,
    build_subspace_basis,
    default_realization,
    eval_couplings,
    hamiltonian_at,
    scheme_couplings,
    with_fit_time,
)
from .spectral import (
    adiabaticity_margin,
    analytic_edge_state,
    energy_gap,
    instantaneous_spectrum,
    ratio_spectrum,
    spectral_flow,
    winding_number,
    zero_mode_distribution,
)
from .dynamics import (
    EvolutionSettings,
    evolve,
    fidelity,
    final_fidelity,
    ghz_initial_state,
    ideal_ghz_state,
    populations,
)
from .oracle import compare_subspace_oracle, full_hilbert_evolve
from .experiments import (
    SweepRunner,
    disorder_sweep,
    disorder_time_map,
    fit_quadratic,
    loss_sweep,
    scale_study,
    threshold_time,
)
from .sta import counterdiabatic_control, evolve_with_sta

__all__ = [
    "__version__",
    "REFERENCE_FIT",
    "AnalyticEdgeState",
    "ChainSpec",
    "ControlField",
    "ControlMode",
    "CouplingProfile",
    "DisorderRealization",
    "EvolutionTrace",
    "FitResult",
    "HamiltonianMatrix",
    "RunManifest",
    "ScaleStudyConfig",
    "Scheme",
    "SiteKind",
    "SiteLabel",
    "SpectrumResult",
    "StateVector",
    "SubspaceBasis",
    "SweepResult",
    "apply_disorder",
    "default_realization",
    "build_subspace_basis",
    "eval_couplings",
    "hamiltonian_at",
    "scheme_couplings",
    "with_fit_time",
    "adiabaticity_margin",
    "analytic_edge_state",
    "energy_gap",
    "instantaneous_spectrum",
    "ratio_spectrum",
    "spectral_flow",
    "winding_number",
    "zero_mode_distribution",
    "EvolutionSettings",
    "evolve",
    "fidelity",
    "final_fidelity",
    "ghz_initial_state",
    "ideal_ghz_state",
    "populations",
    "compare_subspace_oracle",
    "full_hilbert_evolve",
    "SweepRunner",
    "disorder_sweep",
    "disorder_time_map",
    "fit_quadratic",
    "loss_sweep",
    "scale_study",
    "threshold_time",
    "counterdiabatic_control",
    "evolve_with_sta",
]
