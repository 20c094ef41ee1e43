"""
Chain model: Gaussian pulse schedules, the single-excitation basis of each
scheme, quenched bond disorder and the instantaneous subspace Hamiltonian.

Bond layout (site order as in build_subspace_basis):

    Scheme A   e1 -J1- ph1 -J2- e2 -J1- ph2 ... -J2- eN
    Scheme B   P -O1- e1 -J'1- ph1 -J2- e2 ... ph(N-1) -J'2- eN -O2- target
    Scheme C   P -O~1- e1 -J1- ph1 -J2- e2 ... ph(N-1) -J2- eN -O~2- target

Scheme B carries static detunings +delta1 on e1 and +delta2 on eN (rotating
frame of the e^{i delta t} edge phases). Scheme C runs on the reversed pulse
pair, so O~1 has the 3tau shape and O~2 the 2tau shape.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import DimensionMismatchError, TimeOutOfRangeError
from .models import (
    REFERENCE_FIT,
    ChainSpec,
    CouplingProfile,
    DisorderRealization,
    HamiltonianMatrix,
    Scheme,
    SiteKind,
    SiteLabel,
    SubspaceBasis,
)

logger = logging.getLogger(__name__)

# Relative slack on the [0, T] window check.
_TIME_SLACK = 1e-9


def eval_couplings(profile: CouplingProfile, t: float) -> Tuple[float, float]:
    """Return (J1(t), J2(t)); the Gaussians are evaluated exactly, with no truncation window."""
    tau = profile.tau
    j1 = profile.g0 * np.exp(-((t - profile.centers[0] * tau) ** 2) / tau ** 2)
    j2 = profile.g0 * np.exp(-((t - profile.centers[1] * tau) ** 2) / tau ** 2)
    return float(j1), float(j2)


def build_subspace_basis(spec: ChainSpec) -> SubspaceBasis:
    """Ordered single-excitation basis: 2N-1 states for Scheme A, 2N+1 for B/C."""
    labels = []
    for n in range(1, spec.N + 1):
        labels.append(SiteLabel(SiteKind.QUTRIT_EXCITED, n))
        if n < spec.N:
            labels.append(SiteLabel(SiteKind.RESONATOR_PHOTON, n))
    if spec.scheme is not Scheme.A:
        labels.insert(0, SiteLabel(SiteKind.AUX_GROUND_P, 1))
        labels.append(SiteLabel(SiteKind.TARGET_GROUND, spec.N))
    return SubspaceBasis(scheme=spec.scheme, N=spec.N, labels=tuple(labels))


@dataclass(frozen=True, eq=False)
class BondSchedule:
    """
    Clean (disorder-free) bond amplitudes and static diagonal energies.

    bonds[bond_offset : bond_offset + 2N - 2] are the qutrit-resonator bonds
    that receive disorder multipliers; edge drives sit outside that window.
    """
    bonds: np.ndarray
    diagonal: np.ndarray
    bond_offset: int

    def disordered(self, realization: DisorderRealization) -> np.ndarray:
        bonds = self.bonds.copy()
        stop = self.bond_offset + realization.n_bonds
        bonds[self.bond_offset:stop] *= realization.multipliers
        return bonds


def bond_schedule(spec: ChainSpec, j1: float, j2: float) -> BondSchedule:
    """Lay out the bonds of spec.scheme for instantaneous pulse values j1, j2."""
    n_bulk = 2 * spec.N - 2
    bulk = np.empty(n_bulk)
    bulk[0::2] = j1
    bulk[1::2] = j2

    if spec.scheme is Scheme.A:
        return BondSchedule(bonds=bulk, diagonal=np.zeros(2 * spec.N - 1), bond_offset=0)

    diagonal = np.zeros(2 * spec.N + 1)
    if spec.scheme is Scheme.B:
        j1_edge = spec.jprime_scale * j1
        j2_edge = spec.jprime_scale * j2
        bulk[0] = j1_edge
        bulk[-1] = j2_edge
        omega1 = omega2 = spec.omega_edge
        diagonal[1] = spec.delta1
        diagonal[-2] = spec.delta2
        if spec.stark_compensation:
            diagonal[0] += omega1 ** 2 / spec.delta1
            diagonal[2] += j1_edge ** 2 / spec.delta1
            diagonal[-1] += omega2 ** 2 / spec.delta2
            diagonal[-3] += j2_edge ** 2 / spec.delta2
    else:
        # reversed pair: j2 carries the 3tau shape, j1 the 2tau shape
        omega1, omega2 = j2, j1

    bonds = np.concatenate(([omega1], bulk, [omega2]))
    return BondSchedule(bonds=bonds, diagonal=diagonal, bond_offset=1)


def scheme_couplings(spec: ChainSpec, t: float, profile: Optional[CouplingProfile] = None) -> BondSchedule:
    profile = profile or CouplingProfile.from_spec(spec)
    j1, j2 = eval_couplings(profile, t)
    return bond_schedule(spec, j1, j2)


def loss_diagonal(spec: ChainSpec, basis: SubspaceBasis) -> np.ndarray:
    """-i*gamma_n/2 on e@A_n, -i*kappa_n/2 on ph@B_n; |P> and the target do not decay."""
    gamma = spec.gamma_sites()
    kappa = spec.kappa_sites()
    loss = np.zeros(basis.dimension, dtype=complex)
    for i, label in enumerate(basis.labels):
        if label.kind is SiteKind.QUTRIT_EXCITED:
            loss[i] = -0.5j * gamma[label.index - 1]
        elif label.kind is SiteKind.RESONATOR_PHOTON:
            loss[i] = -0.5j * kappa[label.index - 1]
    return loss


def hamiltonian_at(
    spec: ChainSpec,
    basis: SubspaceBasis,
    realization: DisorderRealization,
    t: float,
    lossy: bool = True,
    profile: Optional[CouplingProfile] = None,
) -> HamiltonianMatrix:
    """Instantaneous conditional Hamiltonian on the single-excitation subspace."""
    if basis.dimension != spec.dimension:
        raise DimensionMismatchError("basis", spec.dimension, basis.dimension)
    if realization.n_bonds != 2 * spec.N - 2:
        raise DimensionMismatchError("disorder realization", 2 * spec.N - 2, realization.n_bonds)
    if t < -_TIME_SLACK * spec.T or t > spec.T * (1 + _TIME_SLACK):
        raise TimeOutOfRangeError(t, spec.T)

    schedule = scheme_couplings(spec, t, profile)
    diagonal = schedule.diagonal.astype(complex)
    if lossy:
        diagonal = diagonal + loss_diagonal(spec, basis)
    return HamiltonianMatrix(diagonal=diagonal, offdiagonal=schedule.disordered(realization))


def frame_rates(spec: ChainSpec, basis: SubspaceBasis) -> np.ndarray:
    """Static detuning per basis state: delta1 on e@A1 and delta2 on e@AN for Scheme B, zero elsewhere."""
    rates = np.zeros(basis.dimension)
    if spec.scheme is Scheme.B:
        rates[basis.index_of(SiteLabel(SiteKind.QUTRIT_EXCITED, 1))] = spec.delta1
        rates[basis.index_of(SiteLabel(SiteKind.QUTRIT_EXCITED, spec.N))] = spec.delta2
    return rates


def explicit_phase_hamiltonian(
    spec: ChainSpec,
    basis: SubspaceBasis,
    realization: DisorderRealization,
    t: float,
    lossy: bool = True,
    profile: Optional[CouplingProfile] = None,
) -> np.ndarray:
    """
    Dense Hamiltonian with the static detunings R moved into the bonds:
    H_jk exp(i (r_j - r_k) t) after R is taken off the diagonal.

    Amplitudes in this frame are exp(i r t) times the static-frame ones.
    """
    rates = frame_rates(spec, basis)
    H = hamiltonian_at(spec, basis, realization, t, lossy=lossy, profile=profile).to_dense() - np.diag(rates)
    phase = np.exp(1j * rates * t)
    return phase[:, None] * H * np.conj(phase)[None, :]


def static_hamiltonian(spec: ChainSpec, j1: float, j2: float,
                       realization: Optional[DisorderRealization] = None) -> HamiltonianMatrix:
    """Lossless Hamiltonian for frozen pulse values (ratio scans, closed-form checks)."""
    realization = default_realization(spec, realization)
    schedule = bond_schedule(spec, j1, j2)
    return HamiltonianMatrix(diagonal=schedule.diagonal.astype(complex), offdiagonal=schedule.disordered(realization))


def apply_disorder(spec: ChainSpec, sample_index: int) -> DisorderRealization:
    """
    Quenched multipliers U[1 - delta, 1 + delta], one per qutrit-resonator bond.

    The generator is seeded from (spec.seed, sample_index) through a
    SeedSequence, so a sample does not depend on which worker draws it.
    """
    n_bonds = 2 * spec.N - 2
    delta = spec.disorder_delta
    if delta == 0:
        return DisorderRealization(multipliers=np.ones(n_bonds), seed=spec.seed, sample_index=sample_index)
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, sample_index]))
    multipliers = rng.uniform(1.0 - delta, 1.0 + delta, size=n_bonds)
    return DisorderRealization(multipliers=multipliers, seed=spec.seed, sample_index=sample_index, delta=delta)


def default_realization(spec: ChainSpec, realization: Optional[DisorderRealization] = None) -> DisorderRealization:
    """The given realization, else sample 0 of spec's disorder (all ones when disorder_delta is 0)."""
    return realization if realization is not None else apply_disorder(spec, 0)


def fit_time(N: int, coefficients: Tuple[float, float, float] = REFERENCE_FIT) -> float:
    """g0T = a N^2 + b N + c."""
    a, b, c = coefficients
    return a * N ** 2 + b * N + c


def with_fit_time(spec: ChainSpec, coefficients: Tuple[float, float, float] = REFERENCE_FIT) -> ChainSpec:
    """Copy of spec with T taken from the quadratic threshold fit (tau reset to the default T / tau_ratio)."""
    T = fit_time(spec.N, coefficients)
    logger.debug(f"fit time for N={spec.N}: g0T={T:.4f}")
    return spec.with_updates(T=T, tau=None)
