"""
Artifact writers: CSV tables, JSON summaries and run manifests.

CSV cells use the '{:.12g}' format, which switches to scientific notation
below 1e-4. All files are written to a temporary sibling first and moved
into place with os.replace.
"""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from .errors import ConfigFileError
from .models import EvolutionTrace, RunManifest, SpectrumResult, SweepResult

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def atomic_write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_name, path)
    except BaseException:
        if os.path.exists(tmp_name):
            os.unlink(tmp_name)
        raise
    return path


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v) for v in row])
    path = atomic_write_text(path, buffer.getvalue())
    logger.debug(f"wrote {path}")
    return path


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"Object of type {type(value).__name__} is not JSON serializable")


def write_json(path: PathLike, data: Dict[str, Any]) -> Path:
    return atomic_write_text(path, json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n")


def artifact_name(subcommand: str, spec_hash: str, extension: str) -> str:
    return f"{subcommand}_{spec_hash[:12]}.{extension}"


def manifest_path(artifact: PathLike) -> Path:
    artifact = Path(artifact)
    return artifact.with_name(artifact.name + ".manifest.json")


def write_manifest(artifact: PathLike, manifest: RunManifest) -> Path:
    return write_json(manifest_path(artifact), manifest.to_dict())


def read_manifest(path: PathLike) -> RunManifest:
    try:
        with open(path, encoding="utf-8") as handle:
            return RunManifest.from_dict(json.load(handle))
    except (OSError, json.JSONDecodeError, KeyError) as e:
        raise ConfigFileError(str(path), f"not a run manifest ({e})") from e


def trace_table(trace: EvolutionTrace, curves: Dict[str, np.ndarray]) -> tuple:
    """Header and rows (t, norm, one column per named population)."""
    names = list(curves)
    header = ["t", "norm", *names]
    norms = trace.norms
    rows = [[trace.times[i], norms[i], *(curves[name][i] for name in names)] for i in range(len(trace.times))]
    return header, rows


def snapshot_table(trace: EvolutionTrace) -> tuple:
    """Full amplitude dump: t, then Re/Im per basis state and for |G>."""
    header = ["t"]
    for name in trace.basis.names():
        header += [f"re[{name}]", f"im[{name}]"]
    header += ["re[G]", "im[G]"]
    rows = []
    for i, t in enumerate(trace.times):
        row: List[float] = [t]
        for amplitude in trace.states[i]:
            row += [amplitude.real, amplitude.imag]
        row += [trace.decoupled.real, trace.decoupled.imag]
        rows.append(row)
    return header, rows


def spectrum_table(times: Sequence[float], flow: Sequence[SpectrumResult], column: str = "t") -> tuple:
    """(t, E_1..E_dim); real parts only."""
    dim = len(flow[0].eigenvalues) if flow else 0
    header = [column, *(f"E_{k + 1}" for k in range(dim))]
    rows = [[t, *np.real(result.eigenvalues)] for t, result in zip(times, flow)]
    return header, rows


def distribution_table(times: Sequence[float], weights: np.ndarray, labels: Optional[Sequence[str]] = None) -> tuple:
    """(t, p_1..p_dim), columns named after the basis labels when given."""
    names = list(labels) if labels is not None else [f"p_{k + 1}" for k in range(weights.shape[1])]
    header = ["t", *names]
    rows = [[t, *weights[i]] for i, t in enumerate(times)]
    return header, rows


def sweep_table(result: SweepResult) -> tuple:
    return result.header, result.rows()
