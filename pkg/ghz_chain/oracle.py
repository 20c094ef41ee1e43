"""
Brute-force reference evolution in the full product space of small chains.

Factor order is A_1..A_N (3 levels L, R, e; plus P for Schemes B/C) followed by
B_1..B_{N-1} (photon number 0 or 1); the first factor is the most
significant digit of the flat index. The full Hamiltonian is assembled from
the level-transition operators of each bond, so it knows nothing about the
single-excitation bookkeeping it is used to certify.
"""

import logging
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.sparse as sp

from .chain import build_subspace_basis, default_realization, scheme_couplings, loss_diagonal
from .dynamics import EvolutionSettings, evolve, ghz_initial_state, propagate
from .errors import BasisMappingError, OracleSizeError, PhotonCutoffError
from .models import (
    ChainSpec,
    CouplingProfile,
    DisorderRealization,
    Scheme,
    SiteKind,
    SiteLabel,
    StateVector,
    decoupled_level,
    flipped,
)

logger = logging.getLogger(__name__)

MAX_ORACLE_N = 4
CUTOFF_TOLERANCE = 1e-10

ProductTerm = Tuple[complex, Sequence[str], Sequence[int]]


def _ket_bra(dim: int, row: int, col: int) -> sp.csr_matrix:
    return sp.csr_matrix(([1.0], ([row], [col])), shape=(dim, dim))


@dataclass(frozen=True)
class FullSpace:
    """Product space of one chain and its local operators."""
    N: int
    qutrit_levels: Tuple[str, ...]

    @classmethod
    def for_spec(cls, spec: ChainSpec) -> "FullSpace":
        if spec.N > MAX_ORACLE_N:
            raise OracleSizeError(spec.N, MAX_ORACLE_N)
        levels = ("L", "R", "e") if spec.scheme is Scheme.A else ("L", "R", "e", "P")
        return cls(N=spec.N, qutrit_levels=levels)

    @property
    def dims(self) -> List[int]:
        return [len(self.qutrit_levels)] * self.N + [2] * (self.N - 1)

    @property
    def dimension(self) -> int:
        return int(np.prod(self.dims))

    def index_of(self, levels: Sequence[str], photons: Sequence[int]) -> int:
        if len(levels) != self.N or len(photons) != self.N - 1:
            raise BasisMappingError(f"{tuple(levels)}|{tuple(photons)}")
        try:
            digits = [self.qutrit_levels.index(level) for level in levels] + list(photons)
        except ValueError as e:
            raise BasisMappingError(f"{tuple(levels)}|{tuple(photons)}") from e
        index = 0
        for digit, dim in zip(digits, self.dims):
            if not 0 <= digit < dim:
                raise BasisMappingError(f"{tuple(levels)}|{tuple(photons)}")
            index = index * dim + digit
        return index

    def embed(self, local: Dict[int, sp.spmatrix]) -> sp.csr_matrix:
        """Tensor local operators (factor position -> matrix) with identities elsewhere."""
        factors = [local.get(pos, sp.identity(dim, format="csr")) for pos, dim in enumerate(self.dims)]
        return reduce(lambda a, b: sp.kron(a, b, format="csr"), factors)

    def level_op(self, qutrit: int, to_level: str, from_level: str) -> sp.csr_matrix:
        """|to><from| on qutrit A_qutrit (1-based)."""
        dim = len(self.qutrit_levels)
        op = _ket_bra(dim, self.qutrit_levels.index(to_level), self.qutrit_levels.index(from_level))
        return self.embed({qutrit - 1: op})

    def annihilation(self, resonator: int) -> sp.csr_matrix:
        return self.embed({self.N + resonator - 1: _ket_bra(2, 0, 1)})

    def photon_number(self, resonator: int) -> sp.csr_matrix:
        return self.embed({self.N + resonator - 1: _ket_bra(2, 1, 1)})

    def label_index(self, label: SiteLabel) -> int:
        return self.index_of(label.qutrit_levels(self.N), label.photons(self.N))

    def decoupled_index(self) -> int:
        return self.index_of([decoupled_level(n) for n in range(1, self.N + 1)], [0] * (self.N - 1))

    def target_level(self) -> str:
        """Level of A_N after transfer (the non-decoupled ground state)."""
        return flipped(decoupled_level(self.N))


def _to_excited(space: FullSpace, excited: SiteLabel, other: SiteLabel) -> sp.csr_matrix:
    """|excited><other| for one nearest-neighbour bond of the subspace chain."""
    n = excited.index
    if other.kind is SiteKind.AUX_GROUND_P:
        return space.level_op(1, "e", "P")
    if other.kind is SiteKind.TARGET_GROUND:
        return space.level_op(space.N, "e", space.target_level())
    if other.kind is SiteKind.RESONATOR_PHOTON:
        # B_m couples A_m and A_{m+1} out of the level j_m, the flip of A_m's decoupled level
        j_m = flipped(decoupled_level(other.index))
        return (space.level_op(n, "e", j_m) @ space.annihilation(other.index)).tocsr()
    raise BasisMappingError(f"{excited}-{other}")


def _diagonal_operator(space: FullSpace, label: SiteLabel) -> sp.csr_matrix:
    """Projector acting as |label><label| inside the single-excitation sector."""
    if label.kind is SiteKind.QUTRIT_EXCITED:
        return space.level_op(label.index, "e", "e")
    if label.kind is SiteKind.RESONATOR_PHOTON:
        return space.photon_number(label.index)
    if label.kind is SiteKind.AUX_GROUND_P:
        return space.level_op(1, "P", "P")
    return space.level_op(space.N, space.target_level(), space.target_level())


def excitation_number_operator(space: FullSpace, scheme: Scheme) -> sp.csr_matrix:
    """Photons + |e> occupations (+ |P>_1 and the A_N target level for B/C)."""
    total = sp.csr_matrix((space.dimension, space.dimension))
    for n in range(1, space.N + 1):
        total = total + space.level_op(n, "e", "e")
    for m in range(1, space.N):
        total = total + space.photon_number(m)
    if scheme is not Scheme.A:
        total = total + space.level_op(1, "P", "P")
        total = total + space.level_op(space.N, space.target_level(), space.target_level())
    return total.tocsr()


@dataclass(eq=False)
class FullTrace:
    """Full-space trajectory with conservation diagnostics."""
    space: FullSpace
    times: np.ndarray
    states: np.ndarray
    leakage: np.ndarray
    excitation_number: np.ndarray
    multi_excitation: np.ndarray
    phase_frame: Dict[int, float] = field(default_factory=dict)

    def amplitude(self, index: int) -> np.ndarray:
        """Amplitudes of one product state, rotated into the static detuning frame if needed."""
        values = self.states[:, index]
        if index in self.phase_frame:
            values = values * np.exp(-1j * self.phase_frame[index] * self.times)
        return values


class FullChainHamiltonian:
    """
    Time-dependent full-space Hamiltonian built from the scheme's bond list.

    For Scheme B with explicit_phase, the edge e-states carry no static
    detuning; instead every bond into e@A1 (e@AN) picks up e^{i delta1 t}
    (e^{i delta2 t}).

    Every term is a fixed sparse operator times a time-dependent coefficient,
    so the operators are laid out once on their union sparsity pattern and
    each call is a single sparse matrix-vector product.
    """

    def __init__(self, spec: ChainSpec, realization: DisorderRealization, explicit_phase: bool, lossy: bool = True):
        self.spec = spec
        self.realization = realization
        self.explicit_phase = explicit_phase and spec.scheme is Scheme.B
        self.space = FullSpace.for_spec(spec)
        self.basis = build_subspace_basis(spec)
        self.profile = CouplingProfile.from_spec(spec)
        labels = self.basis.labels
        edge_rates = {
            SiteLabel(SiteKind.QUTRIT_EXCITED, 1): spec.delta1,
            SiteLabel(SiteKind.QUTRIT_EXCITED, spec.N): spec.delta2,
        }
        operators = []
        self._phase_rate = np.zeros(len(labels) - 1)
        for i in range(len(labels) - 1):
            left, right = labels[i], labels[i + 1]
            excited, other = (left, right) if left.kind is SiteKind.QUTRIT_EXCITED else (right, left)
            to_e = _to_excited(self.space, excited, other)
            operators.extend([to_e, to_e.conj().T.tocsr()])
            if self.explicit_phase:
                self._phase_rate[i] = edge_rates.get(excited, 0.0)
        operators.extend(_diagonal_operator(self.space, label) for label in labels)
        self._loss = loss_diagonal(spec, self.basis) if lossy else np.zeros(len(labels), dtype=complex)
        self._layout(operators)

    def _layout(self, operators: List[sp.csr_matrix]) -> None:
        dim = self.space.dimension
        pattern = reduce(lambda a, b: a + abs(b), operators[1:], abs(operators[0])).tocsr()
        pattern.sort_indices()
        rows = np.repeat(np.arange(dim, dtype=np.int64), np.diff(pattern.indptr))
        keys = rows * dim + pattern.indices
        columns = []
        for k, op in enumerate(operators):
            coo = op.tocoo()
            slots = np.searchsorted(keys, coo.row.astype(np.int64) * dim + coo.col)
            columns.append(sp.csr_matrix((coo.data, (slots, np.zeros(len(slots), dtype=np.int64))), shape=(len(keys), 1)))
        self._terms = sp.hstack(columns, format="csr").astype(complex)
        self._indices = pattern.indices
        self._indptr = pattern.indptr

    def coefficients(self, t: float) -> np.ndarray:
        """Per-operator coefficients at t: (bond, conj(bond)) pairs, then the diagonal."""
        schedule = scheme_couplings(self.spec, t, self.profile)
        bonds = schedule.disordered(self.realization) * np.exp(1j * self._phase_rate * t)
        diagonal = schedule.diagonal.astype(complex) + self._loss
        if self.explicit_phase:
            diagonal[1] -= self.spec.delta1
            diagonal[-2] -= self.spec.delta2
        pairs = np.empty(2 * len(bonds), dtype=complex)
        pairs[0::2] = bonds
        pairs[1::2] = np.conj(bonds)
        return np.concatenate((pairs, diagonal))

    def __call__(self, t: float) -> sp.csr_matrix:
        data = self._terms @ self.coefficients(t)
        dim = self.space.dimension
        return sp.csr_matrix((data, self._indices.copy(), self._indptr.copy()), shape=(dim, dim))

    def phase_frame(self) -> Dict[int, float]:
        if not self.explicit_phase:
            return {}
        return {
            self.space.label_index(SiteLabel(SiteKind.QUTRIT_EXCITED, 1)): self.spec.delta1,
            self.space.label_index(SiteLabel(SiteKind.QUTRIT_EXCITED, self.spec.N)): self.spec.delta2,
        }


def product_state(space: FullSpace, description: Union[StateVector, Sequence[ProductTerm]]) -> np.ndarray:
    """Full-space vector from a subspace StateVector or (amplitude, levels, photons) terms."""
    psi = np.zeros(space.dimension, dtype=complex)
    if isinstance(description, StateVector):
        for label, amplitude in zip(description.basis.labels, description.amplitudes):
            if amplitude != 0:
                psi[space.label_index(label)] += amplitude
        psi[space.decoupled_index()] += description.decoupled
        return psi
    for amplitude, levels, photons in description:
        psi[space.index_of(levels, photons)] += amplitude
    return psi


def oracle_step(spec: ChainSpec, settings: EvolutionSettings, explicit_phase: bool) -> float:
    """Base step; the explicit-phase form resolves each detuning period (settings.phase_resolution steps)."""
    step = settings.base_step(spec.pulse_width)
    return settings.phase_resolved_step(spec, step) if explicit_phase else step


def full_hilbert_evolve(
    spec: ChainSpec,
    psi0: Union[StateVector, Sequence[ProductTerm]],
    time_grid: Sequence[float],
    realization: Optional[DisorderRealization] = None,
    settings: Optional[EvolutionSettings] = None,
    explicit_phase: bool = False,
    lossy: bool = True,
) -> FullTrace:
    """Evolve a product-state superposition under the full chain Hamiltonian (N <= 4)."""
    realization = default_realization(spec, realization)
    settings = settings or EvolutionSettings()
    hamiltonian = FullChainHamiltonian(spec, realization, explicit_phase, lossy)
    space = hamiltonian.space
    psi = product_state(space, psi0)

    states, step = propagate(hamiltonian, psi, time_grid, oracle_step(spec, settings, explicit_phase), settings)

    mapped = [space.label_index(label) for label in hamiltonian.basis.labels] + [space.decoupled_index()]
    outside = np.ones(space.dimension, dtype=bool)
    outside[mapped] = False
    number = excitation_number_operator(space, spec.scheme)
    counts = number.diagonal().real
    probabilities = np.abs(states) ** 2
    multi = probabilities[:, counts >= 2].sum(axis=1)
    if np.max(multi) > CUTOFF_TOLERANCE:
        raise PhotonCutoffError(float(np.max(multi)))

    trace = FullTrace(
        space=space,
        times=np.asarray(time_grid, dtype=float),
        states=states,
        leakage=probabilities[:, outside].sum(axis=1),
        excitation_number=probabilities @ counts,
        multi_excitation=multi,
        phase_frame=hamiltonian.phase_frame(),
    )
    logger.debug(f"oracle N={spec.N} scheme={spec.scheme.value} dim={space.dimension} step={step:.3g}")
    return trace


def compare_subspace_oracle(
    spec: ChainSpec,
    time_grid: Sequence[float],
    realization: Optional[DisorderRealization] = None,
    psi0: Optional[StateVector] = None,
    settings: Optional[EvolutionSettings] = None,
    explicit_phase: bool = False,
) -> float:
    """
    Max over the grid of ||psi_subspace(t) - psi_full(t)|| on corresponding
    states (the |G> amplitude included). Lossy specs are compared lossy.

    By default both sides run in the static detuning frame on the same fixed
    step, so any deviation is a mapping error rather than integrator noise.
    explicit_phase runs the full space with e^{i delta t} bond phases instead
    (Scheme B), which also checks the detuning sign convention.
    """
    FullSpace.for_spec(spec)
    settings = settings or EvolutionSettings(verify_step=False)
    realization = default_realization(spec, realization)
    psi0 = psi0 or ghz_initial_state(spec)
    reduced = evolve(spec, realization, psi0, time_grid, lossy=True, settings=settings)
    full = full_hilbert_evolve(spec, psi0, time_grid, realization, settings, explicit_phase=explicit_phase)

    space = full.space
    deviation = np.zeros(len(reduced.times))
    for column, label in enumerate(reduced.basis.labels):
        deviation += np.abs(reduced.states[:, column] - full.amplitude(space.label_index(label))) ** 2
    deviation += np.abs(reduced.decoupled - full.amplitude(space.decoupled_index())) ** 2
    worst = float(np.sqrt(deviation.max()))
    logger.info(f"oracle check N={spec.N} scheme={spec.scheme.value}: max deviation {worst:.3e}")
    return worst
