"""
Study drivers: adiabatic threshold search and its quadratic fit, quenched
disorder sweeps, loss sweeps and the coherence-limited scale study.

Independent evaluations are dispatched through SweepRunner, a thin wrapper
around a thread or process pool. Every task carries its own (seed, sample
index), and results are gathered back by position, so aggregates do not
depend on worker count, backend or completion order.
"""

import logging
import math
import os
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from functools import partial
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Type, TypeVar

import numpy as np

from .chain import apply_disorder, with_fit_time
from .dynamics import EvolutionSettings, final_fidelity
from .errors import ConfigurationError, FitRankError, ThresholdBracketError
from .models import REFERENCE_FIT, ChainSpec, FitResult, ScaleStudyConfig, Scheme, SweepResult

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

DEFAULT_SAMPLES = 101
BRACKET_START = 64.0
BRACKET_LIMIT = 1e6

BACKENDS: Dict[str, Type[Executor]] = {"thread": ThreadPoolExecutor, "process": ProcessPoolExecutor}


class SweepRunner:
    """
    Worker pool for sweep evaluations.

    Usable as a context manager; outside one (or with max_workers=1) tasks
    run inline in the calling thread. The "process" backend runs tasks in
    worker processes; tasks and results must pickle, so sweeps pass
    module-level functions bound with partial.
    """

    def __init__(self, max_workers: Optional[int] = None, backend: str = "thread"):
        """
        Args:
            max_workers: Pool size; defaults to the number of CPUs
            backend: "thread" or "process"
        """
        if backend not in BACKENDS:
            raise ConfigurationError(f'unknown sweep backend "{backend}" (expected one of {sorted(BACKENDS)})')
        self.max_workers = max_workers or os.cpu_count() or 1
        self.backend = backend
        self._executor: Optional[Executor] = None

    def __enter__(self) -> "SweepRunner":
        self.start()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.stop()

    def start(self) -> None:
        if self._executor is None and self.max_workers > 1:
            self._executor = BACKENDS[self.backend](max_workers=self.max_workers)
            logger.debug(f"sweep pool started: {self.backend} x {self.max_workers}")

    def stop(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """Apply fn to every item; results are returned in input order."""
        items = list(items)
        if self._executor is None:
            return [fn(item) for item in items]
        futures = [self._executor.submit(fn, item) for item in items]
        return [future.result() for future in futures]


def _runner(runner: Optional[SweepRunner]) -> SweepRunner:
    return runner if runner is not None else SweepRunner(max_workers=1)


def _provenance(spec: ChainSpec, **extra: Any) -> Dict[str, Any]:
    return {"spec_hash": spec.spec_hash(), "seed": spec.seed, "spec": spec.to_dict(), **extra}


def _mean_stderr(values: Sequence[float]) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    mean = float(np.mean(values))
    if len(values) < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(len(values)))


def threshold_time(
    N: int,
    scheme: Scheme = Scheme.A,
    target_F: float = 0.999,
    base: Optional[ChainSpec] = None,
    settings: Optional[EvolutionSettings] = None,
    monotone_checks: int = 3,
) -> float:
    """
    Smallest integer g0T whose lossless, disorder-free GHZ fidelity reaches target_F.

    The bracket doubles from g0T = 64 until the target is met (failing past
    1e6), then integer bisection narrows it. Fidelity is assumed monotone in T
    above the crossing; a few points past the result are sampled and any
    violation is logged.

    Args:
        N: Number of qutrits
        scheme: Protocol variant
        target_F: Fidelity to reach at t = T
        base: Optional spec supplying the other protocol parameters
        settings: Integrator settings
        monotone_checks: Points sampled above the result

    Returns:
        Threshold g0T
    """
    spec = (base or ChainSpec(N=N, scheme=scheme)).with_updates(
        N=N, scheme=scheme.value, gamma=0.0, kappa=0.0, disorder_delta=0.0, tau=None
    )
    cache: Dict[float, float] = {}

    def fid(T: float) -> float:
        if T not in cache:
            cache[T] = final_fidelity(spec.with_updates(T=T), lossy=False, settings=settings)
            logger.debug(f"threshold N={N}: F(g0T={T:g}) = {cache[T]:.6f}")
        return cache[T]

    lo, hi = 0.0, BRACKET_START
    while fid(hi) < target_F:
        if hi >= BRACKET_LIMIT:
            raise ThresholdBracketError(target_F, BRACKET_LIMIT, max(cache.values()))
        lo, hi = hi, min(2 * hi, BRACKET_LIMIT)
    logger.info(f"threshold N={N} scheme={scheme.value}: bracket ({lo:g}, {hi:g}]")

    while hi - lo > 1:
        mid = float(math.floor((lo + hi) / 2))
        if fid(mid) >= target_F:
            hi = mid
        else:
            lo = mid

    for k in range(1, monotone_checks + 1):
        above = hi + k * max(1.0, round(0.01 * hi))
        if fid(above) < target_F:
            logger.warning(
                f"fidelity not monotone above threshold for N={N}: F(g0T={above:g})={cache[above]:.6f} < {target_F}"
            )
    logger.info(f"threshold N={N} scheme={scheme.value}: g0T* = {hi:g}")
    return hi


def threshold_scan(
    Ns: Sequence[int],
    scheme: Scheme = Scheme.A,
    target_F: float = 0.999,
    runner: Optional[SweepRunner] = None,
    settings: Optional[EvolutionSettings] = None,
) -> List[Tuple[int, float]]:
    """(N, g0T*) for every N, evaluated concurrently."""
    task = partial(threshold_time, scheme=scheme, target_F=target_F, settings=settings)
    times = _runner(runner).map(task, Ns)
    return list(zip(Ns, times))


def fit_quadratic(points: Sequence[Tuple[float, float]]) -> FitResult:
    """Ordinary least squares g0T = a N^2 + b N + c."""
    data = np.asarray(points, dtype=float).reshape(-1, 2)
    n = data[:, 0]
    design = np.column_stack([n ** 2, n, np.ones_like(n)])
    if len(data) < 3:
        raise FitRankError(len(data), int(np.linalg.matrix_rank(design)) if len(data) else 0)
    coefficients, _, rank, _ = np.linalg.lstsq(design, data[:, 1], rcond=None)
    if rank < 3:
        raise FitRankError(len(data), int(rank))
    residual = float(np.linalg.norm(design @ coefficients - data[:, 1]))
    a, b, c = (float(x) for x in coefficients)
    return FitResult(coefficients=(a, b, c), residual_norm=residual,
                     points=tuple((float(p), float(q)) for p, q in data))


def _disorder_sample(settings: Optional[EvolutionSettings], task: Tuple[ChainSpec, int]) -> float:
    point, index = task
    return final_fidelity(point, apply_disorder(point, index), lossy=True, settings=settings)


def _lossy_fidelity(settings: Optional[EvolutionSettings], spec: ChainSpec) -> float:
    return final_fidelity(spec, lossy=True, settings=settings)


def disorder_sweep(
    spec: ChainSpec,
    delta_grid: Sequence[float],
    samples: int = DEFAULT_SAMPLES,
    runner: Optional[SweepRunner] = None,
    settings: Optional[EvolutionSettings] = None,
) -> SweepResult:
    """
    Mean final GHZ fidelity per disorder bound over quenched realizations.

    Realization i of bound delta is drawn from (spec.seed, i). A zero bound
    has a single realization, evaluated once and reported with n_samples = 1.
    An empty grid gives an empty result.
    """
    owners, tasks = [], []
    for d_index, delta in enumerate(delta_grid):
        point = spec.with_updates(disorder_delta=float(delta))
        for i in range(1 if delta == 0 else samples):
            owners.append(d_index)
            tasks.append((point, i))

    logger.info(f"disorder sweep N={spec.N}: {len(delta_grid)} bounds, {samples} samples, {len(tasks)} runs")
    values = _runner(runner).map(partial(_disorder_sample, settings), tasks)

    grouped: Dict[int, List[float]] = {k: [] for k in range(len(delta_grid))}
    for d_index, value in zip(owners, values):
        grouped[d_index].append(value)
    stats = [_mean_stderr(grouped[k]) for k in range(len(delta_grid))]
    return SweepResult(
        axis_labels=("delta",),
        axis_values=np.asarray(delta_grid, dtype=float).reshape(-1, 1),
        mean_fidelity=np.array([mean for mean, _ in stats], dtype=float),
        stderr=np.array([error for _, error in stats], dtype=float),
        n_samples=np.array([len(grouped[k]) for k in range(len(delta_grid))], dtype=int),
        provenance=_provenance(spec, samples=samples),
    )


def disorder_time_map(
    spec: ChainSpec,
    delta_grid: Sequence[float],
    T_grid: Sequence[float],
    samples: int = DEFAULT_SAMPLES,
    runner: Optional[SweepRunner] = None,
    settings: Optional[EvolutionSettings] = None,
) -> SweepResult:
    """Mean fidelity over the (delta, g0T) plane, one disorder sweep per evolution time."""
    rows, means, errors, counts = [], [], [], []
    for T in T_grid:
        sweep = disorder_sweep(spec.with_updates(T=float(T), tau=None), delta_grid, samples, runner, settings)
        for k, delta in enumerate(delta_grid):
            rows.append((float(delta), float(T)))
            means.append(sweep.mean_fidelity[k])
            errors.append(sweep.stderr[k])
            counts.append(sweep.n_samples[k])
    return SweepResult(
        axis_labels=("delta", "g0T"),
        axis_values=np.asarray(rows, dtype=float).reshape(-1, 2),
        mean_fidelity=np.asarray(means),
        stderr=np.asarray(errors),
        n_samples=np.asarray(counts),
        provenance=_provenance(spec, samples=samples),
    )


def _edge_lossless_gamma(N: int, gamma: float) -> Tuple[float, ...]:
    rates = [gamma] * N
    rates[0] = rates[-1] = 0.0
    return tuple(rates)


def loss_sweep(
    spec: ChainSpec,
    gamma_grid: Sequence[float],
    kappa_grid: Sequence[float],
    edge_lossless: bool = False,
    cartesian: bool = False,
    runner: Optional[SweepRunner] = None,
    settings: Optional[EvolutionSettings] = None,
) -> SweepResult:
    """
    Final GHZ fidelity under qutrit decay gamma and resonator decay kappa.

    By default the grids are two separate lines, (gamma, 0) then (0, kappa),
    one per legend entry of a loss plot; cartesian=True evaluates every pair.
    edge_lossless zeroes gamma on A_1 and A_N.
    """
    if cartesian:
        pairs = [(float(g), float(k)) for g in gamma_grid for k in kappa_grid]
    else:
        pairs = [(float(g), 0.0) for g in gamma_grid] + [(0.0, float(k)) for k in kappa_grid]

    points = [
        spec.with_updates(gamma=_edge_lossless_gamma(spec.N, gamma) if edge_lossless else gamma, kappa=kappa)
        for gamma, kappa in pairs
    ]

    logger.info(f"loss sweep N={spec.N} scheme={spec.scheme.value}: {len(pairs)} points")
    values = _runner(runner).map(partial(_lossy_fidelity, settings), points)
    return SweepResult(
        axis_labels=("gamma", "kappa"),
        axis_values=np.asarray(pairs).reshape(-1, 2),
        mean_fidelity=np.asarray(values),
        stderr=np.zeros(len(values)),
        n_samples=np.ones(len(values), dtype=int),
        provenance=_provenance(spec, edge_lossless=edge_lossless),
    )


def scale_study(
    config: ScaleStudyConfig,
    scheme: Scheme = Scheme.A,
    base: Optional[ChainSpec] = None,
    runner: Optional[SweepRunner] = None,
    settings: Optional[EvolutionSettings] = None,
    coefficients: Tuple[float, float, float] = REFERENCE_FIT,
) -> SweepResult:
    """
    GHZ fidelity versus chain size under coherence-limited losses.

    Each N runs for the quadratic-fit time with gamma = 1/(tau_a g0) and
    kappa = 1/(tau_b g0) in units of g0. Rows carry N, g0T and the
    corresponding wall-clock time in seconds.
    """
    gamma, kappa = config.gamma_over_g0, config.kappa_over_g0

    def point(N: int) -> ChainSpec:
        template = base or ChainSpec(N=N, scheme=scheme)
        return with_fit_time(template.with_updates(N=N, scheme=scheme.value, gamma=gamma, kappa=kappa), coefficients)

    specs = [point(N) for N in config.n_grid]
    logger.info(f"scale study scheme={scheme.value}: gamma/g0={gamma:.3e} kappa/g0={kappa:.3e}, {len(specs)} sizes")
    values = _runner(runner).map(partial(_lossy_fidelity, settings), specs)
    axis = np.array([[s.N, s.T, config.seconds(s.T)] for s in specs])
    return SweepResult(
        axis_labels=("N", "g0T", "time_s"),
        axis_values=axis,
        mean_fidelity=np.asarray(values),
        stderr=np.zeros(len(values)),
        n_samples=np.ones(len(values), dtype=int),
        provenance={"config": config.to_dict(), "scheme": scheme.value, "coefficients": list(coefficients)},
    )


def largest_n_above(result: SweepResult, threshold: float = 0.5) -> Optional[int]:
    """Largest N in a scale study whose fidelity exceeds threshold."""
    sizes = result.axis_values[:, 0]
    passing = sizes[result.mean_fidelity > threshold]
    return int(passing.max()) if passing.size else None
