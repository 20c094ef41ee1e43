"""
Exception hierarchy for the qutrit-resonator chain simulator.

Configuration problems (bad keys, unreadable files) derive from
ConfigurationError; numerical and contract failures during a run derive from
SimulationError. The CLI maps the two families to exit codes 2 and 1.
Errors pickle with their message intact, so they cross process-pool
boundaries unchanged.
"""


def _restore_error(cls: type, args: tuple, state: dict) -> "GHZChainError":
    error = Exception.__new__(cls)
    error.args = args
    error.__dict__.update(state)
    return error


class GHZChainError(Exception):
    """Base exception class for ghz_chain."""

    def __reduce__(self):
        # subclasses take structured constructor arguments, not the message
        return _restore_error, (type(self), self.args, self.__dict__)


class ConfigurationError(GHZChainError):
    """Base class for invalid or unreadable run configuration."""


class SimulationError(GHZChainError):
    """Base class for failures raised while simulating."""


class ConfigFileError(ConfigurationError):
    """Raised when a config or manifest file cannot be read or parsed."""

    def __init__(self, path: str, reason: str):
        self.message = f'cannot load config file {path}: {reason}'
        super().__init__(self.message)


class DimensionMismatchError(SimulationError):
    """Raised when two objects that must share a dimension do not."""

    def __init__(self, what: str, expected: int, actual: int):
        self.message = f'{what}: expected dimension {expected}, got {actual}'
        super().__init__(self.message)


class TimeOutOfRangeError(SimulationError):
    """Raised when a time lies outside the pulse window [0, T]."""

    def __init__(self, t: float, duration: float):
        self.message = f't={t!r} outside the evolution window [0, {duration!r}]'
        super().__init__(self.message)


class EigensolverError(SimulationError):
    """Raised when the eigensolver fails to converge."""

    def __init__(self, text: str):
        self.message = text
        super().__init__(self.message)


class UndefinedLocalizationError(SimulationError):
    """Raised when J2 = 0 so the localization index -J1/J2 is undefined."""

    def __init__(self, j1: float):
        self.message = f'localization index undefined for J1={j1!r}, J2=0'
        super().__init__(self.message)


class GapClosedError(SimulationError):
    """Raised when the bulk gap closes (J1 = J2) and no winding is defined."""

    def __init__(self, j1: float, j2: float):
        self.message = f'gap closed: J1={j1!r} equals J2={j2!r}'
        super().__init__(self.message)


class StepSizeConvergenceError(SimulationError):
    """Raised when step halving does not reach the requested tolerance."""

    def __init__(self, tolerance: float, deviation: float, step: float):
        self.message = (
            f'step-size search did not converge: deviation {deviation:.3e} > {tolerance:.1e} '
            f'at step {step:.3e}'
        )
        super().__init__(self.message)


class NonFiniteStateError(SimulationError):
    """Raised when the propagated state contains NaN or inf."""

    def __init__(self, t: float, step: float, norm: float):
        self.message = f'non-finite amplitudes at t={t:.6g} (step {step:.3e}, last finite norm {norm:.6g})'
        super().__init__(self.message)


class UnknownProjectorError(SimulationError):
    """Raised when a population is requested for an unknown state name."""

    def __init__(self, name: str):
        self.message = f'unknown projector "{name}"'
        super().__init__(self.message)


class OracleSizeError(SimulationError):
    """Raised when the full-Hilbert-space oracle is asked for too many qutrits."""

    def __init__(self, n: int, limit: int):
        self.message = f'full-space oracle supports N <= {limit}, got N={n}'
        super().__init__(self.message)


class BasisMappingError(SimulationError):
    """Raised when a subspace label has no counterpart in the full product space."""

    def __init__(self, label: str):
        self.message = f'no product state for subspace label {label}'
        super().__init__(self.message)


class PhotonCutoffError(SimulationError):
    """Raised when population reaches the photon-cutoff boundary."""

    def __init__(self, population: float):
        self.message = f'multi-excitation population {population:.3e} exceeds the single-photon cutoff tolerance'
        super().__init__(self.message)


class ThresholdBracketError(SimulationError):
    """Raised when the target fidelity is not reached inside the search bracket."""

    def __init__(self, target: float, limit: float, best: float):
        self.message = f'fidelity {target} not reached by g0T={limit:g} (best {best:.6f})'
        super().__init__(self.message)


class FitRankError(SimulationError):
    """Raised when the quadratic fit is rank deficient."""

    def __init__(self, n_points: int, rank: int):
        self.message = f'quadratic fit needs 3 independent points, got {n_points} with rank {rank}'
        super().__init__(self.message)


class OracleMismatchError(SimulationError):
    """Raised when the subspace and full-space evolutions disagree beyond tolerance."""

    def __init__(self, deviation: float, tolerance: float):
        self.message = f'subspace/oracle deviation {deviation:.3e} exceeds {tolerance:.1e}'
        super().__init__(self.message)
