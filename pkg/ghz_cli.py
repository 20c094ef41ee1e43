"""
ghz_chain CLI
Batch front-end: resolves a ChainSpec from a config file and flags, runs one
study, and writes CSV/JSON artifacts with a manifest next to each file.

Exit codes: 0 success, 1 numerical failure, 2 invalid configuration.
"""
import argparse
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from ghz_chain import __version__
from ghz_chain.chain import build_subspace_basis, with_fit_time
from ghz_chain.dynamics import (
    DEFAULT_PROJECTORS,
    DEFAULT_SAMPLES,
    EvolutionSettings,
    edge_state,
    evolve,
    fidelity,
    ghz_initial_state,
    ideal_ghz_state,
    populations,
)
from ghz_chain.errors import ConfigurationError, OracleMismatchError, SimulationError
from ghz_chain.experiments import (
    SweepRunner,
    disorder_sweep,
    disorder_time_map,
    fit_quadratic,
    largest_n_above,
    loss_sweep,
    scale_study,
    threshold_scan,
    threshold_time,
)
from ghz_chain.export import (
    artifact_name,
    distribution_table,
    read_manifest,
    snapshot_table,
    spectrum_table,
    sweep_table,
    trace_table,
    write_csv,
    write_json,
    write_manifest,
)
from ghz_chain.models import (
    ChainSpec,
    ControlMode,
    RunManifest,
    ScaleStudyConfig,
    Scheme,
    load_mapping,
    validation_keys,
)
from ghz_chain.oracle import compare_subspace_oracle
from ghz_chain.spectral import adiabaticity_margin, ratio_spectrum, spectral_flow, zero_mode_distribution
from ghz_chain.sta import control_profile, evolve_with_sta
from run_config import run_config

logger = logging.getLogger(__name__)

# Subcommands that run at the quadratic-fit time unless T is given explicitly.
FIT_TIME_COMMANDS = {"disorder-sweep", "loss-sweep"}


def parse_float_grid(text: str) -> List[float]:
    """'0,0.1,0.5' or 'start:stop:num' (inclusive linspace)."""
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            return [float(x) for x in np.linspace(float(start), float(stop), int(num))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid grid {text!r}: {e}")


def positive_int(text: str) -> int:
    """argparse type for sample counts."""
    try:
        value = int(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid count {text!r}: {e}")
    if value < 1:
        raise argparse.ArgumentTypeError(f"count must be at least 1, got {value}")
    return value


def parse_int_grid(text: str) -> List[int]:
    """'10,20,30' or 'start:stop:step' (stop inclusive)."""
    try:
        if ":" in text:
            start, stop, step = (int(x) for x in text.split(":"))
            return list(range(start, stop + 1, step))
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid integer grid {text!r}: {e}")


@dataclass
class RunContext:
    """Everything a subcommand handler needs besides the ChainSpec."""
    command: str
    out_dir: Path
    params: Dict[str, Any]
    runner: SweepRunner
    settings: EvolutionSettings
    run_hash: str

    def path(self, extension: str, stem: Optional[str] = None) -> Path:
        return self.out_dir / artifact_name(stem or self.command, self.run_hash, extension)


Handler = Callable[[ChainSpec, RunContext], Tuple[List[Path], Dict[str, Any]]]


def _number(ctx: RunContext, key: str, default: float) -> float:
    value = ctx.params.get(key)
    return float(default if value is None else value)


def _time_grid(spec: ChainSpec, ctx: RunContext, default: int) -> np.ndarray:
    return np.linspace(0.0, spec.T, int(ctx.params.get("points") or default))


def cmd_spectrum(spec: ChainSpec, ctx: RunContext):
    ratios = ctx.params.get("ratios")
    if ratios:
        flow = ratio_spectrum(spec.N, spec.scheme, ratios, spec.g0)
        header, rows = spectrum_table(ratios, flow, column="J1/J2")
    else:
        times = _time_grid(spec, ctx, 201)
        header, rows = spectrum_table(times, spectral_flow(spec, times))
    return [write_csv(ctx.path("csv"), header, rows)], {}


def cmd_zero_mode(spec: ChainSpec, ctx: RunContext):
    times = _time_grid(spec, ctx, 201)
    weights = zero_mode_distribution(spec, times)
    header, rows = distribution_table(times, weights, build_subspace_basis(spec).names())
    outputs = [write_csv(ctx.path("csv"), header, rows)]
    margin = adiabaticity_margin(spec, times)
    outputs.append(write_csv(ctx.path("csv", "adiabaticity"), ["t", "margin"], zip(times, margin)))
    return outputs, {"max_adiabaticity_margin": float(np.max(margin))}


def _trace_outputs(ctx: RunContext, trace, curves) -> List[Path]:
    outputs = [write_csv(ctx.path("csv"), *trace_table(trace, curves))]
    if ctx.params.get("snapshots"):
        outputs.append(write_csv(ctx.path("csv", f"{ctx.command}-snapshots"), *snapshot_table(trace)))
    return outputs


def cmd_evolve(spec: ChainSpec, ctx: RunContext):
    times = np.linspace(0.0, spec.T, int(ctx.params.get("times") or DEFAULT_SAMPLES))
    trace = evolve(spec, None, edge_state(spec, "left"), times, lossy=True, settings=ctx.settings)
    curves = populations(trace, ["left_edge", "right_edge"], spec)
    final_norm = float(trace.norms[-1])
    print(f"final norm: {final_norm:.12f}")
    return _trace_outputs(ctx, trace, curves), {"final_norm": final_norm, "step": trace.step}


def cmd_ghz(spec: ChainSpec, ctx: RunContext):
    times = np.linspace(0.0, spec.T, int(ctx.params.get("times") or DEFAULT_SAMPLES))
    trace = evolve(spec, None, ghz_initial_state(spec), times, lossy=True, settings=ctx.settings)
    curves = populations(trace, DEFAULT_PROJECTORS, spec)
    final = float(fidelity(trace, ideal_ghz_state(spec))[-1])
    print(f"final GHZ fidelity: {final:.6f}")
    return _trace_outputs(ctx, trace, curves), {"final_fidelity": final, "final_norm": float(trace.norms[-1])}


def _sweep_outputs(ctx: RunContext, result) -> List[Path]:
    csv_path = write_csv(ctx.path("csv"), *sweep_table(result))
    json_path = write_json(ctx.path("json"), result.to_dict())
    return [csv_path, json_path]


def cmd_disorder_sweep(spec: ChainSpec, ctx: RunContext):
    deltas = ctx.params.get("deltas") or [0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
    samples = int(ctx.params.get("samples") or 101)
    T_grid = ctx.params.get("T_grid")
    if T_grid:
        result = disorder_time_map(spec, deltas, T_grid, samples, ctx.runner, ctx.settings)
        for row in result.rows():
            print(f"delta={row[0]:g}  g0T={row[1]:g}  mean F={row[2]:.6f}  stderr={row[3]:.2e}")
    else:
        result = disorder_sweep(spec, deltas, samples, ctx.runner, ctx.settings)
        for row in result.rows():
            print(f"delta={row[0]:g}  mean F={row[1]:.6f}  stderr={row[2]:.2e}")
    return _sweep_outputs(ctx, result), {"mean_fidelity": result.mean_fidelity.tolist()}


def cmd_loss_sweep(spec: ChainSpec, ctx: RunContext):
    gammas = ctx.params.get("gammas") or []
    kappas = ctx.params.get("kappas") or []
    if not gammas and not kappas:
        raise ConfigurationError("loss-sweep needs --gammas and/or --kappas")
    result = loss_sweep(spec, gammas, kappas, bool(ctx.params.get("edge_lossless")),
                        bool(ctx.params.get("cartesian")), runner=ctx.runner, settings=ctx.settings)
    for row in result.rows():
        print(f"gamma={row[0]:g}  kappa={row[1]:g}  F={row[2]:.6f}")
    return _sweep_outputs(ctx, result), {"fidelity": result.mean_fidelity.tolist()}


def cmd_threshold(spec: ChainSpec, ctx: RunContext):
    target = _number(ctx, "target_F", 0.999)
    value = threshold_time(spec.N, spec.scheme, target, base=spec, settings=ctx.settings)
    print(f"{value:g}")
    path = write_json(ctx.path("json"), {"N": spec.N, "scheme": spec.scheme.value, "target_F": target, "g0T": value})
    return [path], {"g0T": value}


def cmd_fit(spec: ChainSpec, ctx: RunContext):
    Ns = ctx.params.get("Ns") or list(range(10, 61, 5))
    target = _number(ctx, "target_F", 0.999)
    points = threshold_scan(Ns, spec.scheme, target, ctx.runner, ctx.settings)
    fit = fit_quadratic(points)
    a, b, c = fit.coefficients
    print(f"g0T = {a:.6g} N^2 + {b:.6g} N + {c:.6g}  (residual {fit.residual_norm:.3g})")
    outputs = [
        write_csv(ctx.path("csv"), ["N", "g0T", "fit"], [(n, t, fit.predict(n)) for n, t in points]),
        write_json(ctx.path("json"), fit.to_dict()),
    ]
    return outputs, {"coefficients": list(fit.coefficients)}


def cmd_scale_study(spec: ChainSpec, ctx: RunContext):
    g0_mhz = _number(ctx, "g0_mhz", 50.0)
    tau_a = _number(ctx, "tau_a", 1e-3)
    tau_b = _number(ctx, "tau_b", 1e-3)
    Ns = ctx.params.get("Ns") or list(range(10, 151, 10))
    config = ScaleStudyConfig.from_mhz(g0_mhz, tau_a, tau_b, tuple(Ns))
    result = scale_study(config, spec.scheme, base=spec, runner=ctx.runner, settings=ctx.settings)
    for row in result.rows():
        print(f"N={int(row[0])}  g0T={row[1]:.1f}  t={row[2]:.3e}s  F={row[3]:.4f}")
    largest = largest_n_above(result, 0.5)
    print(f"largest N with F > 0.5: {largest}")
    return _sweep_outputs(ctx, result), {"fidelity": result.mean_fidelity.tolist(), "largest_n_above_half": largest}


def cmd_sta(spec: ChainSpec, ctx: RunContext):
    mode = ControlMode(ctx.params.get("mode") or ControlMode.FULL_RANK.value)
    times = np.linspace(0.0, spec.T, int(ctx.params.get("times") or DEFAULT_SAMPLES))
    trace = evolve_with_sta(spec, mode, times, settings=ctx.settings)
    curves = populations(trace, ["left_edge", "right_edge"], spec)
    outputs = _trace_outputs(ctx, trace, curves)
    alpha = control_profile(spec, times, mode)
    header = ["t", *(f"alpha_{n}" for n in range(1, spec.N))]
    outputs.append(write_csv(ctx.path("csv", "sta-alpha"), header, ([t, *row] for t, row in zip(times, alpha))))
    transfer = float(curves["right_edge"][-1])
    print(f"right-edge population at T: {transfer:.6f}")
    return outputs, {"transfer_population": transfer, "final_norm": float(trace.norms[-1])}


def cmd_oracle_check(spec: ChainSpec, ctx: RunContext):
    times = _time_grid(spec, ctx, 101)
    tolerance = _number(ctx, "tolerance", 1e-8)
    deviation = compare_subspace_oracle(spec, times)
    print(f"max deviation: {deviation:.3e}")
    path = write_json(ctx.path("json"), {"max_deviation": deviation, "tolerance": tolerance})
    if deviation > tolerance:
        raise OracleMismatchError(deviation, tolerance)
    return [path], {"max_deviation": deviation}


COMMANDS: Dict[str, Tuple[Handler, str, Tuple[str, ...]]] = {
    "spectrum": (cmd_spectrum, "instantaneous spectra along the pulses (or vs J1/J2 with --ratios)", ("points", "ratios")),
    "zero-mode": (cmd_zero_mode, "zero-mode site distribution and adiabaticity margin", ("points",)),
    "evolve": (cmd_evolve, "evolve the left edge state", ("times", "snapshots")),
    "ghz": (cmd_ghz, "GHZ protocol populations", ("times", "snapshots")),
    "disorder-sweep": (cmd_disorder_sweep, "mean fidelity versus disorder bound", ("deltas", "samples", "T_grid")),
    "loss-sweep": (cmd_loss_sweep, "fidelity versus qutrit/resonator decay", ("gammas", "kappas", "edge_lossless", "cartesian")),
    "threshold": (cmd_threshold, "minimal g0T reaching the target fidelity", ("target_F",)),
    "fit": (cmd_fit, "threshold scan and quadratic fit", ("Ns", "target_F")),
    "scale-study": (cmd_scale_study, "fidelity versus N for physical coherence times", ("g0_mhz", "tau_a", "tau_b", "Ns")),
    "sta": (cmd_sta, "counterdiabatic transfer", ("mode", "times", "snapshots")),
    "oracle-check": (cmd_oracle_check, "compare subspace and full-space evolution (N <= 4)", ("points", "tolerance")),
}


def build_parser() -> argparse.ArgumentParser:
    spec_flags = argparse.ArgumentParser(add_help=False)
    spec_flags.add_argument("--config", help="YAML/JSON file with ChainSpec keys")
    spec_flags.add_argument("--N", type=int, help="number of qutrits")
    spec_flags.add_argument("--scheme", choices=[s.value for s in Scheme])
    spec_flags.add_argument("--g0T", type=float, help="total evolution time in units of 1/g0")
    spec_flags.add_argument("--delta", type=float, help="relative disorder bound")
    spec_flags.add_argument("--gamma", type=float, help="qutrit decay rate / g0")
    spec_flags.add_argument("--kappa", type=float, help="resonator decay rate / g0")
    spec_flags.add_argument("--seed", type=int)
    spec_flags.add_argument("--out", help="output directory (default: GHZ_OUTPUT_DIR)")

    parser = argparse.ArgumentParser(prog="ghz", description="GHZ generation on a qutrit-resonator chain")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--manifest", help="replay the run recorded in a manifest file")
    subparsers = parser.add_subparsers(dest="command")

    sub = {name: subparsers.add_parser(name, parents=[spec_flags], help=text)
           for name, (_, text, _) in COMMANDS.items()}

    for name in ("spectrum", "zero-mode", "oracle-check"):
        sub[name].add_argument("--points", type=positive_int, help="number of time samples")
    sub["spectrum"].add_argument("--ratios", type=parse_float_grid, help="J1/J2 values, e.g. 0:2:101")
    for name in ("evolve", "ghz", "sta"):
        sub[name].add_argument("--times", type=positive_int, help=f"reporting samples (default {DEFAULT_SAMPLES})")
        sub[name].add_argument("--snapshots", action="store_true", help="also dump full amplitudes")
    sub["disorder-sweep"].add_argument("--deltas", type=parse_float_grid, help="disorder bounds, e.g. 0:0.5:6")
    sub["disorder-sweep"].add_argument("--samples", type=positive_int, help="realizations per bound (default 101)")
    sub["disorder-sweep"].add_argument("--g0T-grid", dest="T_grid", type=parse_float_grid,
                                       help="evolution times for a (delta, g0T) map, e.g. 400:1200:5")
    sub["loss-sweep"].add_argument("--gammas", type=parse_float_grid)
    sub["loss-sweep"].add_argument("--kappas", type=parse_float_grid)
    sub["loss-sweep"].add_argument("--edge-lossless", dest="edge_lossless", action="store_true")
    sub["loss-sweep"].add_argument("--cartesian", action="store_true", help="full gamma x kappa grid")
    for name in ("threshold", "fit"):
        sub[name].add_argument("--target-F", dest="target_F", type=float, help="target fidelity (default 0.999)")
    for name in ("fit", "scale-study"):
        sub[name].add_argument("--Ns", type=parse_int_grid, help="chain sizes, e.g. 10:60:5")
    sub["scale-study"].add_argument("--g0-mhz", dest="g0_mhz", type=float, help="g0/2pi in MHz (default 50)")
    sub["scale-study"].add_argument("--tau-a", dest="tau_a", type=float, help="qutrit coherence time in s")
    sub["scale-study"].add_argument("--tau-b", dest="tau_b", type=float, help="resonator coherence time in s")
    sub["sta"].add_argument("--mode", choices=[m.value for m in ControlMode])
    sub["oracle-check"].add_argument("--tolerance", type=float, help="maximum allowed deviation (default 1e-8)")
    return parser


def resolve_spec(args: argparse.Namespace, base: Optional[Dict[str, Any]] = None) -> ChainSpec:
    """Config file (or manifest spec) first, then flag overrides."""
    data: Dict[str, Any] = dict(base or {})
    if getattr(args, "config", None):
        data.update(load_mapping(args.config))
    explicit_time = "T" in data or getattr(args, "g0T", None) is not None
    overrides = {
        "N": getattr(args, "N", None),
        "scheme": getattr(args, "scheme", None),
        "T": getattr(args, "g0T", None),
        "disorder_delta": getattr(args, "delta", None),
        "gamma": getattr(args, "gamma", None),
        "kappa": getattr(args, "kappa", None),
        "seed": getattr(args, "seed", None),
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    spec = ChainSpec.from_dict(data)
    if args.command in FIT_TIME_COMMANDS and not explicit_time:
        spec = with_fit_time(spec)
        logger.info(f"{args.command}: using fit time g0T={spec.T:.4f}")
    return spec


def _run_hash(spec: ChainSpec, command: str, params: Dict[str, Any]) -> str:
    payload = json.dumps({"command": command, "spec": spec.to_dict(), "params": params}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def execute(args: argparse.Namespace, base_spec: Optional[Dict[str, Any]] = None) -> int:
    handler, _, param_names = COMMANDS[args.command]
    params = {name: getattr(args, name, None) for name in param_names}
    spec = resolve_spec(args, base_spec)
    out_dir = Path(getattr(args, "out", None) or run_config.output_dir)
    run_hash = _run_hash(spec, args.command, params)
    settings = EvolutionSettings(max_step=run_config.max_step)

    logger.info(f"ghz {args.command}: N={spec.N} scheme={spec.scheme.value} T={spec.T:g} hash={run_hash[:12]}")
    started = time.perf_counter()
    with SweepRunner(run_config.workers, run_config.pool) as runner:
        ctx = RunContext(args.command, out_dir, params, runner, settings, run_hash)
        outputs, results = handler(spec, ctx)
    duration = time.perf_counter() - started

    for output in outputs:
        manifest = RunManifest(
            subcommand=args.command,
            spec=spec.to_dict(),
            seed=spec.seed,
            outputs=[str(p) for p in outputs],
            parameters=params,
            results={**results, "spec_hash": spec.spec_hash()},
            tool_version=__version__,
            duration_seconds=duration,
        )
        write_manifest(output, manifest)
    logger.info(f"ghz {args.command}: wrote {len(outputs)} file(s) to {out_dir} in {duration:.2f}s")
    return 0


def _replay(parser: argparse.ArgumentParser, path: str) -> int:
    """Re-run a manifest's subcommand with its spec and parameters, writing next to the original outputs."""
    manifest = read_manifest(path)
    args = parser.parse_args([manifest.subcommand])
    for name, value in manifest.parameters.items():
        setattr(args, name, value)
    if manifest.outputs:
        args.out = str(Path(manifest.outputs[0]).parent)
    logger.info(f"replaying {manifest.subcommand} from {path}")
    return execute(args, base_spec=manifest.spec)


def run(argv: Optional[Sequence[str]] = None) -> int:
    run_config.configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    try:
        if args.command is None:
            if not args.manifest:
                parser.print_help(sys.stderr)
                return 2
            return _replay(parser, args.manifest)
        base = read_manifest(args.manifest).spec if args.manifest else None
        return execute(args, base_spec=base)
    except ValidationError as e:
        keys = ", ".join(validation_keys(e))
        logger.error(f"invalid configuration ({keys}): {e}")
        print(f"error: invalid configuration key(s): {keys}", file=sys.stderr)
        return 2
    except ConfigurationError as e:
        logger.error(f"configuration error: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (SimulationError, ValueError, ArithmeticError) as e:
        logger.error(f"simulation failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
