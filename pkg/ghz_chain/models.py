"""
Data models for the qutrit-resonator chain simulator.

ChainSpec is the validated run description (pydantic, loaded from YAML/JSON
config files). The remaining types are immutable containers passed between
the chain, spectral, dynamics, experiments and sta modules; each exposes
to_dict() for the JSON artifacts written by the CLI.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import scipy.sparse as sp
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .errors import ConfigFileError, ConfigurationError, DimensionMismatchError

logger = logging.getLogger(__name__)

# g0T = a N^2 + b N + c reaching 99.9% lossless fidelity (Scheme A).
REFERENCE_FIT: Tuple[float, float, float] = (6.9419, 2.455, -59.8933)


class Scheme(Enum):
    """Protocol variant: bare chain (A), dispersive edges (B), resonant edge drives (C)."""
    A = "A"
    B = "B"
    C = "C"


RateSpec = Union[float, Tuple[float, ...]]


class ChainSpec(BaseModel):
    """
    Full protocol description.

    All rates are in units of the coupling scale g0 and times in units of 1/g0.
    gamma may be a scalar or a per-qutrit tuple of length N; kappa a scalar or
    a per-resonator tuple of length N-1.
    """
    model_config = ConfigDict(extra="forbid", frozen=True)

    N: int = Field(ge=2)
    scheme: Scheme = Scheme.A
    g0: float = Field(default=1.0, gt=0)
    T: float = Field(default=3600.0, gt=0)
    tau: Optional[float] = Field(default=None, gt=0)
    tau_ratio: float = Field(default=5.25, gt=0)
    delta1: float = 400.0
    delta2: float = 400.0
    jprime_scale: float = Field(default=20.0, gt=0)
    omega_edge: float = Field(default=20.0, ge=0)
    gamma: RateSpec = 0.0
    kappa: RateSpec = 0.0
    disorder_delta: float = Field(default=0.0, ge=0)
    seed: int = Field(default=0, ge=0, lt=2**64)
    stark_compensation: bool = True

    @field_validator("gamma", "kappa")
    @classmethod
    def _non_negative_rates(cls, value: RateSpec) -> RateSpec:
        rates = value if isinstance(value, tuple) else (value,)
        if any(r < 0 or not math.isfinite(r) for r in rates):
            raise ValueError("decay rates must be finite and >= 0")
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> "ChainSpec":
        if isinstance(self.gamma, tuple) and len(self.gamma) != self.N:
            raise ValueError(f"gamma: per-qutrit vector needs {self.N} entries, got {len(self.gamma)}")
        if isinstance(self.kappa, tuple) and len(self.kappa) != self.N - 1:
            raise ValueError(f"kappa: per-resonator vector needs {self.N - 1} entries, got {len(self.kappa)}")
        if self.scheme is Scheme.B:
            if self.delta1 == 0 or self.delta2 == 0:
                raise ValueError("delta1/delta2: Scheme B needs nonzero edge detunings")
            floor = 10 * self.jprime_scale * self.g0
            if min(abs(self.delta1), abs(self.delta2)) < floor:
                logger.warning(
                    f"Scheme B detuning min(|delta1|, |delta2|)={min(abs(self.delta1), abs(self.delta2)):g} "
                    f"is below 10*jprime_scale*g0={floor:g}; edge elimination will be poor"
                )
        return self

    @property
    def pulse_width(self) -> float:
        """Gaussian width tau (defaults to T / tau_ratio)."""
        return self.tau if self.tau is not None else self.T / self.tau_ratio

    @property
    def dimension(self) -> int:
        return 2 * self.N - 1 if self.scheme is Scheme.A else 2 * self.N + 1

    @property
    def is_lossy(self) -> bool:
        return bool(np.any(self.gamma_sites() > 0) or np.any(self.kappa_sites() > 0))

    def gamma_sites(self) -> np.ndarray:
        """Qutrit excited-state decay rate per site A_1..A_N."""
        if isinstance(self.gamma, tuple):
            return np.asarray(self.gamma, dtype=float)
        return np.full(self.N, float(self.gamma))

    def kappa_sites(self) -> np.ndarray:
        """Resonator decay rate per resonator B_1..B_{N-1}."""
        if isinstance(self.kappa, tuple):
            return np.asarray(self.kappa, dtype=float)
        return np.full(self.N - 1, float(self.kappa))

    def with_updates(self, **changes: Any) -> "ChainSpec":
        """Return a validated copy with the given fields replaced."""
        data = self.to_dict()
        data.update(changes)
        return ChainSpec.from_dict(data)

    def to_dict(self) -> Dict[str, Any]:
        """Convert spec to dictionary for JSON/YAML serialization."""
        return self.model_dump(mode="json")

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ChainSpec":
        """Create spec from dictionary; raises pydantic ValidationError naming bad keys."""
        return cls.model_validate(data)

    @classmethod
    def from_file(cls, path: Union[str, Path], overrides: Optional[Dict[str, Any]] = None) -> "ChainSpec":
        """Load a flat YAML or JSON mapping, applying flag overrides on top."""
        data = load_mapping(path)
        if overrides:
            data.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_dict(data)

    def spec_hash(self) -> str:
        """SHA-256 of the canonical JSON form; used to name artifacts."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_mapping(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a flat mapping from a .yaml/.yml/.json file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigFileError(str(path), str(e)) from e
    try:
        data = json.loads(text) if path.suffix == ".json" else yaml.safe_load(text)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigFileError(str(path), str(e)) from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigFileError(str(path), "top level must be a mapping of ChainSpec keys")
    return data


def validation_keys(error: ValidationError) -> List[str]:
    """Dotted names of the offending keys in a pydantic ValidationError."""
    keys = []
    for item in error.errors():
        loc = ".".join(str(part) for part in item.get("loc", ())) or "<spec>"
        keys.append(loc)
    return keys


@dataclass(frozen=True)
class CouplingProfile:
    """
    Gaussian pulse pair J1, J2 = g0 exp[-(t - c tau)^2 / tau^2].

    centers are in units of tau: (3, 2) is the standard assignment (J2 first,
    J1 second); Scheme C uses the reversed (2, 3).
    """
    g0: float
    tau: float
    centers: Tuple[float, float] = (3.0, 2.0)

    @classmethod
    def from_spec(cls, spec: ChainSpec) -> "CouplingProfile":
        profile = cls(g0=spec.g0, tau=spec.pulse_width)
        return profile.reversed() if spec.scheme is Scheme.C else profile

    def reversed(self) -> "CouplingProfile":
        return CouplingProfile(g0=self.g0, tau=self.tau, centers=(self.centers[1], self.centers[0]))


class SiteKind(Enum):
    AUX_GROUND_P = "P"
    QUTRIT_EXCITED = "e"
    RESONATOR_PHOTON = "ph"
    TARGET_GROUND = "target"


def decoupled_level(n: int) -> str:
    """Ground level of qutrit A_n in the decoupled state |G> = |RLR...>."""
    return "R" if n % 2 == 1 else "L"


def flipped(level: str) -> str:
    return "L" if level == "R" else "R"


@dataclass(frozen=True)
class SiteLabel:
    """One single-excitation basis state, named by where the excitation sits."""
    kind: SiteKind
    index: int

    def __str__(self) -> str:
        site = "B" if self.kind is SiteKind.RESONATOR_PHOTON else "A"
        return f"{self.kind.value}@{site}{self.index}"

    @classmethod
    def parse(cls, text: str) -> "SiteLabel":
        """Inverse of str(): 'e@A3' -> SiteLabel(QUTRIT_EXCITED, 3)."""
        kind_text, _, site = text.partition("@")
        kind = SiteKind(kind_text)
        return cls(kind=kind, index=int(site[1:]))

    def qutrit_levels(self, n_qutrits: int) -> Tuple[str, ...]:
        """Level of every qutrit A_1..A_N in this product state."""
        if self.kind is SiteKind.AUX_GROUND_P:
            n_flipped, excited, special = 0, None, "P"
        elif self.kind is SiteKind.QUTRIT_EXCITED:
            n_flipped, excited, special = self.index - 1, self.index, "e"
        elif self.kind is SiteKind.RESONATOR_PHOTON:
            n_flipped, excited, special = self.index, None, None
        else:
            n_flipped, excited, special = n_qutrits, None, None
        levels = []
        for n in range(1, n_qutrits + 1):
            ground = decoupled_level(n)
            levels.append(flipped(ground) if n <= n_flipped else ground)
        if special == "P":
            levels[0] = "P"
        elif excited is not None:
            levels[excited - 1] = special
        return tuple(levels)

    def photons(self, n_qutrits: int) -> Tuple[int, ...]:
        """Photon number in each resonator B_1..B_{N-1}."""
        occupation = [0] * (n_qutrits - 1)
        if self.kind is SiteKind.RESONATOR_PHOTON:
            occupation[self.index - 1] = 1
        return tuple(occupation)


@dataclass(frozen=True)
class SubspaceBasis:
    """Ordered single-excitation evolution subspace for one scheme."""
    scheme: Scheme
    N: int
    labels: Tuple[SiteLabel, ...]

    @property
    def dimension(self) -> int:
        return len(self.labels)

    def index_of(self, label: Union[SiteLabel, str]) -> int:
        if isinstance(label, str):
            label = SiteLabel.parse(label)
        return self.labels.index(label)

    @property
    def left_edge_index(self) -> int:
        return 0

    @property
    def right_edge_index(self) -> int:
        return self.dimension - 1

    def kind_mask(self, kind: SiteKind) -> np.ndarray:
        return np.array([label.kind is kind for label in self.labels])

    def zero_mode_sublattice(self) -> np.ndarray:
        """
        Boolean mask of the sites carrying the transfer mode.

        Scheme A: all qutrit sites. Scheme B: |P>, interior qutrits and the
        target (e@A1 and e@AN are adiabatically eliminated). Scheme C: |P>,
        resonator photons and the target.
        """
        mask = np.zeros(self.dimension, dtype=bool)
        for i, label in enumerate(self.labels):
            if self.scheme is Scheme.A:
                mask[i] = label.kind is SiteKind.QUTRIT_EXCITED
            elif self.scheme is Scheme.B:
                mask[i] = label.kind in (SiteKind.AUX_GROUND_P, SiteKind.TARGET_GROUND) or (
                    label.kind is SiteKind.QUTRIT_EXCITED and 1 < label.index < self.N
                )
            else:
                mask[i] = label.kind is not SiteKind.QUTRIT_EXCITED
        return mask

    def names(self) -> List[str]:
        return [str(label) for label in self.labels]


@dataclass(frozen=True, eq=False)
class DisorderRealization:
    """Quenched multipliers, one per qutrit-resonator bond (2N-2 of them)."""
    multipliers: np.ndarray
    seed: int
    sample_index: int = 0
    delta: float = 0.0

    @property
    def n_bonds(self) -> int:
        return int(self.multipliers.shape[0])

    @classmethod
    def clean(cls, n_qutrits: int, seed: int = 0) -> "DisorderRealization":
        return cls(multipliers=np.ones(2 * n_qutrits - 2), seed=seed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "multipliers": self.multipliers.tolist(),
            "seed": self.seed,
            "sample_index": self.sample_index,
            "delta": self.delta,
        }


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    """
    Instantaneous subspace operator: complex diagonal plus a real symmetric
    nearest-neighbour band. Imaginary diagonal parts are -decay/2 (<= 0).
    """
    diagonal: np.ndarray
    offdiagonal: np.ndarray

    def __post_init__(self):
        if self.offdiagonal.shape[0] != self.diagonal.shape[0] - 1:
            raise DimensionMismatchError(
                "bond band", self.diagonal.shape[0] - 1, self.offdiagonal.shape[0]
            )

    @property
    def dimension(self) -> int:
        return int(self.diagonal.shape[0])

    @property
    def is_hermitian(self) -> bool:
        return not np.any(np.imag(self.diagonal))

    def to_dense(self) -> np.ndarray:
        dense = np.diag(self.diagonal.astype(complex))
        idx = np.arange(self.dimension - 1)
        dense[idx, idx + 1] = self.offdiagonal
        dense[idx + 1, idx] = self.offdiagonal
        return dense

    def to_sparse(self) -> sp.csr_matrix:
        return sp.diags(
            [self.offdiagonal.astype(complex), self.diagonal.astype(complex), self.offdiagonal.astype(complex)],
            offsets=[-1, 0, 1],
            format="csr",
        )

    @staticmethod
    def linear_combination(first: "HamiltonianMatrix", second: "HamiltonianMatrix",
                           a: float, b: float) -> "HamiltonianMatrix":
        """a*first + b*second (real a, b keep the band real)."""
        return HamiltonianMatrix(
            diagonal=a * first.diagonal + b * second.diagonal,
            offdiagonal=a * first.offdiagonal + b * second.offdiagonal,
        )


@dataclass(frozen=True, eq=False)
class StateVector:
    """Amplitudes over a SubspaceBasis plus the decoupled |G> amplitude."""
    basis: SubspaceBasis
    amplitudes: np.ndarray
    decoupled: complex = 0.0

    def __post_init__(self):
        if self.amplitudes.shape[0] != self.basis.dimension:
            raise DimensionMismatchError("state vector", self.basis.dimension, self.amplitudes.shape[0])

    def norm(self) -> float:
        return float(math.sqrt(np.vdot(self.amplitudes, self.amplitudes).real + abs(self.decoupled) ** 2))

    def overlap(self, other: "StateVector") -> complex:
        """<other|self>."""
        if other.basis.dimension != self.basis.dimension:
            raise DimensionMismatchError("overlap", self.basis.dimension, other.basis.dimension)
        return complex(np.vdot(other.amplitudes, self.amplitudes) + np.conj(other.decoupled) * self.decoupled)


@dataclass(eq=False)
class EvolutionTrace:
    """
    Sampled trajectory: reporting grid, subspace snapshots (rows), the constant
    decoupled amplitude, and named overlap curves filled in on request.
    """
    basis: SubspaceBasis
    times: np.ndarray
    states: np.ndarray
    decoupled: complex
    initial: StateVector
    step: float = 0.0
    overlaps: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def norms(self) -> np.ndarray:
        sub = np.sum(np.abs(self.states) ** 2, axis=1)
        return np.sqrt(sub + abs(self.decoupled) ** 2)

    def state_at(self, i: int) -> StateVector:
        return StateVector(basis=self.basis, amplitudes=self.states[i].copy(), decoupled=self.decoupled)

    @property
    def final(self) -> StateVector:
        return self.state_at(-1)


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    """Sorted eigenpairs (columns of eigenvectors) and the tracked zero mode."""
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    zero_mode_index: int

    @property
    def zero_mode_energy(self) -> complex:
        return self.eigenvalues[self.zero_mode_index]

    @property
    def zero_mode_vector(self) -> np.ndarray:
        return self.eigenvectors[:, self.zero_mode_index]


@dataclass(frozen=True, eq=False)
class AnalyticEdgeState:
    """
    Closed-form zero mode: amplitude lambda^n on qutrit A_n with
    lambda = -J1/J2, normalized; nothing on resonators (gamma=1, eta=0).
    """
    lam: float
    amplitudes: np.ndarray
    gamma_amplitude: float = 1.0
    eta_amplitude: float = 0.0

    @property
    def left_localized(self) -> bool:
        return abs(self.lam) < 1.0

    def embed(self, basis: SubspaceBasis) -> np.ndarray:
        """Place the qutrit amplitudes on the e@A_n sites of a Scheme-A basis."""
        vector = np.zeros(basis.dimension)
        for n, amplitude in enumerate(self.amplitudes, start=1):
            vector[basis.index_of(SiteLabel(SiteKind.QUTRIT_EXCITED, n))] = amplitude
        return vector


@dataclass(eq=False)
class SweepResult:
    """Aggregated final fidelities over a parameter axis (one row per point)."""
    axis_labels: Tuple[str, ...]
    axis_values: np.ndarray
    mean_fidelity: np.ndarray
    stderr: np.ndarray
    n_samples: np.ndarray
    provenance: Dict[str, Any] = field(default_factory=dict)

    def rows(self) -> List[List[float]]:
        if len(self.mean_fidelity) == 0:
            return []
        values = np.atleast_2d(self.axis_values.reshape(len(self.mean_fidelity), -1))
        return [
            [*values[i].tolist(), float(self.mean_fidelity[i]), float(self.stderr[i]), int(self.n_samples[i])]
            for i in range(len(self.mean_fidelity))
        ]

    @property
    def header(self) -> List[str]:
        return [*self.axis_labels, "mean_F", "stderr", "n_samples"]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "axis_labels": list(self.axis_labels),
            "rows": self.rows(),
            "provenance": self.provenance,
        }


@dataclass(frozen=True, eq=False)
class FitResult:
    """Least-squares quadratic g0T = a N^2 + b N + c."""
    coefficients: Tuple[float, float, float]
    residual_norm: float
    points: Tuple[Tuple[float, float], ...]

    def predict(self, n: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        a, b, c = self.coefficients
        return a * np.asarray(n) ** 2 + b * np.asarray(n) + c

    def to_dict(self) -> Dict[str, Any]:
        return {
            "coefficients": list(self.coefficients),
            "residual_norm": self.residual_norm,
            "points": [list(p) for p in self.points],
        }


@dataclass(frozen=True)
class ScaleStudyConfig:
    """
    Physical-unit scale study: g0_physical is an angular frequency (rad/s),
    tau_a / tau_b are qutrit / resonator coherence times in seconds.
    """
    g0_physical: float
    tau_a: float
    tau_b: float
    n_grid: Tuple[int, ...] = tuple(range(10, 151, 10))

    def __post_init__(self):
        if self.g0_physical <= 0 or self.tau_a <= 0 or self.tau_b <= 0:
            raise ConfigurationError("g0_physical, tau_a and tau_b must be positive")

    @classmethod
    def from_mhz(cls, g0_mhz: float, tau_a: float, tau_b: float,
                 n_grid: Tuple[int, ...] = tuple(range(10, 151, 10))) -> "ScaleStudyConfig":
        """g0/2pi given in MHz."""
        return cls(g0_physical=2 * math.pi * g0_mhz * 1e6, tau_a=tau_a, tau_b=tau_b, n_grid=tuple(n_grid))

    @property
    def gamma_over_g0(self) -> float:
        return 1.0 / (self.tau_a * self.g0_physical)

    @property
    def kappa_over_g0(self) -> float:
        return 1.0 / (self.tau_b * self.g0_physical)

    def seconds(self, g0t: float) -> float:
        """Convert a dimensionless g0*t into seconds."""
        return g0t / self.g0_physical

    def to_dict(self) -> Dict[str, Any]:
        return {
            "g0_physical": self.g0_physical,
            "tau_a": self.tau_a,
            "tau_b": self.tau_b,
            "n_grid": list(self.n_grid),
        }


class ControlMode(Enum):
    FULL_RANK = "full_rank"
    NNN_TRUNCATED = "nnn_truncated"


@dataclass(frozen=True, eq=False)
class ControlField:
    """
    Counterdiabatic control at one instant: alpha_n on the A_n-A_{n+1}
    next-nearest-neighbour bonds and the assembled Hermitian matrix H_c.
    """
    t: float
    alpha: np.ndarray
    mode: ControlMode
    matrix: np.ndarray


@dataclass
class RunManifest:
    """Provenance record written next to every CLI artifact."""
    subcommand: str
    spec: Dict[str, Any]
    seed: int
    outputs: List[str] = field(default_factory=list)
    parameters: Dict[str, Any] = field(default_factory=dict)
    results: Dict[str, Any] = field(default_factory=dict)
    tool_version: str = ""
    duration_seconds: float = 0.0
    created_at: datetime = field(default_factory=lambda: datetime.now(timezone.utc))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "subcommand": self.subcommand,
            "spec": self.spec,
            "seed": self.seed,
            "outputs": self.outputs,
            "parameters": self.parameters,
            "results": self.results,
            "tool_version": self.tool_version,
            "duration_seconds": self.duration_seconds,
            "created_at": self.created_at.isoformat(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunManifest":
        return cls(
            subcommand=data["subcommand"],
            spec=data["spec"],
            seed=data.get("seed", 0),
            outputs=data.get("outputs", []),
            parameters=data.get("parameters", {}),
            results=data.get("results", {}),
            tool_version=data.get("tool_version", ""),
            duration_seconds=data.get("duration_seconds", 0.0),
            created_at=datetime.fromisoformat(data["created_at"]) if "created_at" in data else datetime.now(timezone.utc),
        )
