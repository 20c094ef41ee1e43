"""
Time evolution on the single-excitation subspace.

The integrator is a fourth-order commutator-free Magnus scheme: each step
applies two exponentials of real linear combinations of H sampled at the
Gauss nodes. Exponentials are exact (tridiagonal eigensolve for Hermitian
steps, scipy expm_multiply for lossy ones), so the static Scheme-B
detunings do not impose a stiffness limit on the step.

The decoupled |G> amplitude never enters the integrator; it is constant and
carried alongside the subspace vector.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp
from scipy import linalg
from scipy.sparse.linalg import expm_multiply

from .chain import (
    build_subspace_basis,
    default_realization,
    explicit_phase_hamiltonian,
    frame_rates,
    hamiltonian_at,
    loss_diagonal,
)
from .errors import (
    DimensionMismatchError,
    NonFiniteStateError,
    StepSizeConvergenceError,
    UnknownProjectorError,
)
from .models import (
    ChainSpec,
    CouplingProfile,
    DisorderRealization,
    EvolutionTrace,
    HamiltonianMatrix,
    Scheme,
    StateVector,
    SubspaceBasis,
)

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES = 4001

_SQRT3 = math.sqrt(3.0)
_NODES = (0.5 - _SQRT3 / 6.0, 0.5 + _SQRT3 / 6.0)
_ALPHA1 = 0.25 + _SQRT3 / 6.0
_ALPHA2 = 0.25 - _SQRT3 / 6.0

Operator = Union[HamiltonianMatrix, np.ndarray, sp.spmatrix]
HamiltonianFn = Callable[[float], Operator]


@dataclass(frozen=True)
class EvolutionSettings:
    """
    Integrator controls.

    max_step caps the base step (in 1/g0); the base step is also kept below
    tau/50. With verify_step, the run is repeated at half the step and the
    finer result is accepted once the two differ by less than tolerance
    (2-norm, max over the reporting grid); otherwise the step keeps halving
    up to max_halvings times.

    phase_resolution is the number of steps per detuning period when the
    Scheme-B edge detunings are carried as explicit bond phases.
    """
    max_step: float = 0.5
    verify_step: bool = True
    tolerance: float = 1e-7
    max_halvings: int = 6
    phase_resolution: int = 40

    def base_step(self, tau: float) -> float:
        return min(self.max_step, tau / 50.0)

    def phase_resolved_step(self, spec: ChainSpec, step: float) -> float:
        """step capped at 2pi / (phase_resolution * max|delta|) for Scheme B."""
        if spec.scheme is not Scheme.B:
            return step
        detuning = max(abs(spec.delta1), abs(spec.delta2))
        return min(step, 2 * math.pi / (self.phase_resolution * detuning))


def _combine(first: Operator, second: Operator, a: float, b: float) -> Operator:
    if isinstance(first, HamiltonianMatrix):
        return HamiltonianMatrix.linear_combination(first, second, a, b)
    return a * first + b * second


def _apply_exponential(H: Operator, h: float, psi: np.ndarray) -> np.ndarray:
    """exp(-i h H) psi."""
    if isinstance(H, HamiltonianMatrix):
        if H.is_hermitian:
            w, v = linalg.eigh_tridiagonal(H.diagonal.real, H.offdiagonal)
            return v @ (np.exp(-1j * h * w) * (v.T @ psi))
        return expm_multiply(-1j * h * H.to_sparse(), psi)
    if sp.issparse(H):
        return expm_multiply(-1j * h * H.tocsr(), psi)
    if np.allclose(H, H.conj().T, rtol=0.0, atol=1e-14):
        w, v = linalg.eigh(H)
        return v @ (np.exp(-1j * h * w) * (v.conj().T @ psi))
    return linalg.expm(-1j * h * H) @ psi


def cf4_step(hamiltonian: HamiltonianFn, t: float, h: float, psi: np.ndarray) -> np.ndarray:
    """One commutator-free fourth-order Magnus step from t to t + h."""
    H1 = hamiltonian(t + _NODES[0] * h)
    H2 = hamiltonian(t + _NODES[1] * h)
    psi = _apply_exponential(_combine(H1, H2, _ALPHA1, _ALPHA2), h, psi)
    return _apply_exponential(_combine(H1, H2, _ALPHA2, _ALPHA1), h, psi)


def _run_fixed(hamiltonian: HamiltonianFn, psi0: np.ndarray, times: np.ndarray, step: float) -> np.ndarray:
    states = np.empty((len(times), psi0.shape[0]), dtype=complex)
    psi = psi0.astype(complex)
    t_now = 0.0
    last_norm = float(np.linalg.norm(psi))
    for k, t_report in enumerate(times):
        span = t_report - t_now
        if span > 0:
            n_sub = max(1, int(math.ceil(span / step - 1e-9)))
            h = span / n_sub
            for j in range(n_sub):
                psi = cf4_step(hamiltonian, t_now + j * h, h, psi)
            if not np.all(np.isfinite(psi)):
                raise NonFiniteStateError(float(t_report), h, last_norm)
            t_now = float(t_report)
            last_norm = float(np.linalg.norm(psi))
        states[k] = psi
    return states


def propagate(
    hamiltonian: HamiltonianFn,
    psi0: np.ndarray,
    time_grid: Sequence[float],
    step: float,
    settings: Optional[EvolutionSettings] = None,
) -> Tuple[np.ndarray, float]:
    """
    Integrate i dpsi/dt = H(t) psi from t = 0 and sample it on time_grid.

    Returns (snapshots, accepted step). Shared by the subspace, control and
    full-space evolutions.
    """
    settings = settings or EvolutionSettings()
    times = np.asarray(time_grid, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] < 0 or np.any(np.diff(times) <= 0):
        raise ValueError("time grid must be non-empty, non-negative and strictly increasing")

    coarse = _run_fixed(hamiltonian, psi0, times, step)
    if not settings.verify_step:
        return coarse, step

    deviation = float("inf")
    for _ in range(settings.max_halvings + 1):
        fine = _run_fixed(hamiltonian, psi0, times, step / 2)
        deviation = float(np.max(np.linalg.norm(coarse - fine, axis=1)))
        logger.debug(f"step {step:.4g} vs {step / 2:.4g}: deviation {deviation:.3e}")
        if deviation < settings.tolerance:
            return fine, step / 2
        coarse, step = fine, step / 2
    raise StepSizeConvergenceError(settings.tolerance, deviation, step)


def _uniform_decay_rate(spec: ChainSpec, basis: SubspaceBasis) -> Optional[float]:
    """Common decay rate if every basis state decays equally, else None."""
    rates = -2.0 * loss_diagonal(spec, basis).imag
    if rates[0] > 0 and np.all(rates == rates[0]):
        return float(rates[0])
    return None


def evolve(
    spec: ChainSpec,
    realization: Optional[DisorderRealization],
    psi0: StateVector,
    time_grid: Optional[Sequence[float]] = None,
    lossy: bool = True,
    settings: Optional[EvolutionSettings] = None,
    explicit_phase: bool = False,
) -> EvolutionTrace:
    """
    Evolve psi0 under the (conditional) chain Hamiltonian.

    The state is not renormalized: with losses its norm is the surviving
    probability, matching the trace-decaying non-Hermitian Liouville form.
    When every basis state decays at one rate Gamma the lossless trajectory is
    scaled by exp(-Gamma t / 2) instead of integrating a non-Hermitian H.

    With explicit_phase (Scheme B only) the edge detunings ride on the bond
    phases and the step resolves each detuning period; snapshots are rotated
    back so the trace is reported in the static frame either way.
    """
    basis = psi0.basis
    if basis.dimension != spec.dimension:
        raise DimensionMismatchError("initial state", spec.dimension, basis.dimension)
    realization = default_realization(spec, realization)
    settings = settings or EvolutionSettings()
    times = np.linspace(0.0, spec.T, DEFAULT_SAMPLES) if time_grid is None else np.asarray(time_grid, dtype=float)
    profile = CouplingProfile.from_spec(spec)

    uniform_rate = _uniform_decay_rate(spec, basis) if lossy else None
    integrate_lossy = lossy and uniform_rate is None and spec.is_lossy

    explicit_phase = explicit_phase and spec.scheme is Scheme.B
    rates = frame_rates(spec, basis)

    def hamiltonian(t: float) -> Operator:
        if explicit_phase:
            return explicit_phase_hamiltonian(spec, basis, realization, t, lossy=integrate_lossy, profile=profile)
        return hamiltonian_at(spec, basis, realization, t, lossy=integrate_lossy, profile=profile)

    step = settings.base_step(spec.pulse_width)
    if explicit_phase:
        step = settings.phase_resolved_step(spec, step)
    logger.debug(
        f"evolve N={spec.N} scheme={spec.scheme.value} T={spec.T:g} step={step:.4g} "
        f"lossy={lossy} uniform_rate={uniform_rate}"
    )
    states, step = propagate(hamiltonian, psi0.amplitudes, times, step, settings)
    if explicit_phase:
        states = states * np.exp(-1j * np.outer(times, rates))
    if uniform_rate is not None:
        states = states * np.exp(-0.5 * uniform_rate * times)[:, None]
    return EvolutionTrace(
        basis=basis, times=times, states=states, decoupled=complex(psi0.decoupled), initial=psi0, step=step
    )


def _basis_vector(basis: SubspaceBasis, index: int, amplitude: complex = 1.0) -> np.ndarray:
    vector = np.zeros(basis.dimension, dtype=complex)
    vector[index] = amplitude
    return vector


def ghz_initial_state(spec: ChainSpec) -> StateVector:
    """(|G> + |left edge>)/sqrt(2); the left edge is e@A1 (Scheme A) or P@A1 (B/C)."""
    basis = build_subspace_basis(spec)
    amplitude = 1.0 / math.sqrt(2.0)
    return StateVector(basis=basis, amplitudes=_basis_vector(basis, basis.left_edge_index, amplitude),
                       decoupled=amplitude)


def ghz_sign(spec: ChainSpec) -> int:
    """Relative sign of the right-edge branch: -(-1)^N for A/B, +(-1)^N for C."""
    parity = (-1) ** spec.N
    return parity if spec.scheme is Scheme.C else -parity


def ideal_ghz_state(spec: ChainSpec) -> StateVector:
    basis = build_subspace_basis(spec)
    amplitude = 1.0 / math.sqrt(2.0)
    return StateVector(
        basis=basis,
        amplitudes=_basis_vector(basis, basis.right_edge_index, ghz_sign(spec) * amplitude),
        decoupled=amplitude,
    )


def edge_state(spec: ChainSpec, side: str = "left") -> StateVector:
    """Pure edge basis state ("left" or "right")."""
    basis = build_subspace_basis(spec)
    if side not in ("left", "right"):
        raise UnknownProjectorError(f"{side}_edge")
    index = basis.left_edge_index if side == "left" else basis.right_edge_index
    return StateVector(basis=basis, amplitudes=_basis_vector(basis, index))


def _spec_for(basis: SubspaceBasis, spec: Optional[ChainSpec]) -> ChainSpec:
    return spec if spec is not None else ChainSpec(N=basis.N, scheme=basis.scheme)


def named_state(basis: SubspaceBasis, name: Union[str, int], spec: Optional[ChainSpec] = None) -> StateVector:
    """
    Resolve a projector name: "decoupled", "left_edge", "right_edge",
    "ghz_initial", "ghz_ideal", a site label such as "ph@B2", or a basis index.
    """
    if isinstance(name, (int, np.integer)):
        if not 0 <= name < basis.dimension:
            raise UnknownProjectorError(str(name))
        return StateVector(basis=basis, amplitudes=_basis_vector(basis, int(name)))
    if name == "decoupled":
        return StateVector(basis=basis, amplitudes=np.zeros(basis.dimension, dtype=complex), decoupled=1.0)
    if name == "left_edge":
        return StateVector(basis=basis, amplitudes=_basis_vector(basis, basis.left_edge_index))
    if name == "right_edge":
        return StateVector(basis=basis, amplitudes=_basis_vector(basis, basis.right_edge_index))
    if name == "ghz_initial":
        return ghz_initial_state(_spec_for(basis, spec))
    if name == "ghz_ideal":
        return ideal_ghz_state(_spec_for(basis, spec))
    try:
        index = basis.index_of(name)
    except ValueError as e:
        raise UnknownProjectorError(name) from e
    return StateVector(basis=basis, amplitudes=_basis_vector(basis, index))


def fidelity(trace: EvolutionTrace, target: StateVector) -> np.ndarray:
    """F(t) = |<target|psi(t)>|^2 with psi left unnormalized."""
    if target.basis.dimension != trace.basis.dimension:
        raise DimensionMismatchError("fidelity target", trace.basis.dimension, target.basis.dimension)
    overlap = trace.states @ np.conj(target.amplitudes) + np.conj(target.decoupled) * trace.decoupled
    return np.abs(overlap) ** 2


def populations(
    trace: EvolutionTrace,
    projectors: Sequence[Union[str, int]],
    spec: Optional[ChainSpec] = None,
) -> Dict[str, np.ndarray]:
    """Squared overlaps with each named state; results are cached on trace.overlaps."""
    curves = {}
    for name in projectors:
        key = str(name)
        curves[key] = fidelity(trace, named_state(trace.basis, name, spec))
        trace.overlaps[key] = curves[key]
    return curves


def final_fidelity(
    spec: ChainSpec,
    realization: Optional[DisorderRealization] = None,
    lossy: bool = True,
    settings: Optional[EvolutionSettings] = None,
) -> float:
    """GHZ fidelity at t = T starting from ghz_initial_state."""
    trace = evolve(spec, realization, ghz_initial_state(spec), [0.0, spec.T], lossy=lossy, settings=settings)
    return float(fidelity(trace, ideal_ghz_state(spec))[-1])


DEFAULT_PROJECTORS: List[str] = ["ghz_initial", "ghz_ideal", "left_edge", "right_edge"]
