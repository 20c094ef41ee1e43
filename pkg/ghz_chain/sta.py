"""
Counterdiabatic acceleration of the Scheme-A edge transfer.

The control is built from the closed-form zero mode phi(t):

    H_c = i (|dphi/dt><phi| - |phi><dphi/dt|)

which removes every transition out of phi (full_rank). Restricting H_c to
the A_n - A_{n+1} pairs gives the next-nearest-neighbour form
sum_n i alpha_n |A_{n+1}><A_n| + h.c. (nnn_truncated).
"""

import logging
from typing import Callable, Optional, Sequence, Tuple

import numpy as np

from .chain import build_subspace_basis, default_realization, eval_couplings, hamiltonian_at
from .dynamics import DEFAULT_SAMPLES, EvolutionSettings, edge_state, propagate
from .errors import ConfigurationError
from .models import (
    ChainSpec,
    ControlField,
    ControlMode,
    CouplingProfile,
    EvolutionTrace,
    Scheme,
    StateVector,
    SubspaceBasis,
)
from .spectral import analytic_edge_state

logger = logging.getLogger(__name__)

Couplings = Callable[[float], Tuple[float, float]]


def _zero_mode(couplings: Couplings, t: float, N: int) -> np.ndarray:
    return analytic_edge_state(*couplings(t), N).amplitudes


def _zero_mode_derivative(couplings: Couplings, t: float, N: int, h: float, duration: float) -> np.ndarray:
    """Central difference, one-sided at the ends of [0, duration]."""
    if t - h < 0:
        return (_zero_mode(couplings, t + h, N) - _zero_mode(couplings, t, N)) / h
    if t + h > duration:
        return (_zero_mode(couplings, t, N) - _zero_mode(couplings, t - h, N)) / h
    return (_zero_mode(couplings, t + h, N) - _zero_mode(couplings, t - h, N)) / (2 * h)


def counterdiabatic_control(
    spec: ChainSpec,
    t: float,
    mode: ControlMode = ControlMode.FULL_RANK,
    scale: float = 1.0,
    couplings: Optional[Couplings] = None,
    basis: Optional[SubspaceBasis] = None,
) -> ControlField:
    if spec.scheme is not Scheme.A:
        raise ConfigurationError(f"counterdiabatic control is defined on the Scheme A chain, got {spec.scheme.value}")
    if couplings is None:
        profile = CouplingProfile.from_spec(spec)

        def couplings(s: float) -> Tuple[float, float]:
            return eval_couplings(profile, s)

    basis = basis or build_subspace_basis(spec)
    phi = _zero_mode(couplings, t, spec.N)
    phi_dot = _zero_mode_derivative(couplings, t, spec.N, 1e-4 * spec.T, spec.T)
    alpha = scale * (phi_dot[1:] * phi[:-1] - phi[1:] * phi_dot[:-1])

    qutrit_sites = np.arange(0, basis.dimension, 2)
    matrix = np.zeros((basis.dimension, basis.dimension), dtype=complex)
    if mode is ControlMode.FULL_RANK:
        block = 1j * scale * (np.outer(phi_dot, phi) - np.outer(phi, phi_dot))
        matrix[np.ix_(qutrit_sites, qutrit_sites)] = block
    else:
        rows, cols = qutrit_sites[1:], qutrit_sites[:-1]
        matrix[rows, cols] = 1j * alpha
        matrix[cols, rows] = -1j * alpha
    return ControlField(t=float(t), alpha=alpha, mode=mode, matrix=matrix)


def control_profile(
    spec: ChainSpec,
    time_grid: Sequence[float],
    mode: ControlMode = ControlMode.FULL_RANK,
) -> np.ndarray:
    """alpha_n(t) rows for export, shape (len(time_grid), N - 1)."""
    basis = build_subspace_basis(spec)
    return np.array([counterdiabatic_control(spec, float(t), mode, basis=basis).alpha for t in time_grid])


def evolve_with_sta(
    spec: ChainSpec,
    mode: ControlMode = ControlMode.FULL_RANK,
    time_grid: Optional[Sequence[float]] = None,
    psi0: Optional[StateVector] = None,
    scale: float = 1.0,
    settings: Optional[EvolutionSettings] = None,
) -> EvolutionTrace:
    """
    Lossless evolution under H(t) + H_c(t), starting from the left edge
    state unless psi0 is given. scale = 0 reproduces the uncontrolled run.
    """
    psi0 = psi0 or edge_state(spec, "left")
    basis = psi0.basis
    settings = settings or EvolutionSettings()
    realization = default_realization(spec)
    profile = CouplingProfile.from_spec(spec)
    times = np.linspace(0.0, spec.T, DEFAULT_SAMPLES) if time_grid is None else np.asarray(time_grid, dtype=float)

    def couplings(s: float) -> Tuple[float, float]:
        return eval_couplings(profile, s)

    def hamiltonian(t: float) -> np.ndarray:
        H0 = hamiltonian_at(spec, basis, realization, t, lossy=False, profile=profile).to_dense()
        return H0 + counterdiabatic_control(spec, t, mode, scale, couplings, basis).matrix

    logger.debug(f"sta N={spec.N} T={spec.T:g} mode={mode.value} scale={scale:g}")
    states, step = propagate(hamiltonian, psi0.amplitudes, times, settings.base_step(spec.pulse_width), settings)
    return EvolutionTrace(
        basis=basis, times=times, states=states, decoupled=complex(psi0.decoupled), initial=psi0, step=step
    )
