"""CSV and JSON codecs for update sequences, traces, induced maps and reports."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np
import pandas as pd

from ..config import DEFAULT_CONFIG
from ..coupling.contractive import CouplingTrace
from ..jacobian.induced_map import InducedMapSpec
from ..jacobian.matrices import JacobianMatrix
from ..walk.chain import UpdateSequence

FLOAT_FORMAT = "%.17g"
SEQUENCE_COLUMNS = ("t", "i", "theta")
TRACE_COLUMNS = ("t", "dist_main", "dist_scaffold")


def update_sequence_frame(seq: UpdateSequence, start: int = 0) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "t": np.arange(start, start + len(seq), dtype=np.int64),
            "i": seq.planes,
            "theta": seq.angles,
        }
    )


def update_sequence_from_frame(frame: pd.DataFrame, n: int) -> UpdateSequence:
    _require_columns(frame, SEQUENCE_COLUMNS)
    ordered = frame.sort_values("t")
    return UpdateSequence(n, ordered["i"].to_numpy(dtype=np.int64), ordered["theta"].to_numpy(dtype=float))


def write_update_sequence(seq: UpdateSequence, path: Path) -> Path:
    return _write_frame(update_sequence_frame(seq), path)


def read_update_sequence(path: Path, n: int) -> UpdateSequence:
    return update_sequence_from_frame(_read_frame(path), n)


def trace_frame(trace: CouplingTrace, replicate: int | None = None) -> pd.DataFrame:
    frame = pd.DataFrame(
        {
            "t": np.arange(trace.dist_scaffold.size, dtype=np.int64),
            "dist_main": trace.dist_main,
            "dist_scaffold": trace.dist_scaffold,
        }
    )
    if replicate is not None:
        frame.insert(0, "replicate", replicate)
    return frame


def trace_from_frame(frame: pd.DataFrame) -> CouplingTrace:
    _require_columns(frame, TRACE_COLUMNS)
    ordered = frame.sort_values("t")
    main = ordered["dist_main"].to_numpy(dtype=float)
    zero = np.flatnonzero(main == 0.0)
    coalesced = bool(zero.size) and bool(np.all(main[zero[0]:] == 0.0))
    return CouplingTrace(
        dist_main=main,
        dist_scaffold=ordered["dist_scaffold"].to_numpy(dtype=float),
        coalesced=coalesced,
        coalescence_step=int(zero[0]) if coalesced else None,
    )


def write_trace(trace: CouplingTrace, path: Path) -> Path:
    return _write_frame(trace_frame(trace), path)


def read_trace(path: Path) -> CouplingTrace:
    return trace_from_frame(_read_frame(path))


def spec_payload(spec: InducedMapSpec) -> dict[str, Any]:
    return {
        "n": spec.n,
        "base_point": spec.X.reshape(-1).tolist(),
        "T": spec.T,
        "S": spec.S.tolist(),
        "I": spec.planes.tolist(),
        "eta": spec.eta.tolist(),
        "c": spec.c,
    }


def spec_from_payload(payload: Mapping[str, Any]) -> InducedMapSpec:
    missing = {"n", "base_point", "T", "S", "I", "eta", "c"}.difference(payload)
    if missing:
        raise KeyError(f"Missing required fields: {sorted(missing)}")
    n = int(payload["n"])
    return InducedMapSpec(
        X=np.asarray(payload["base_point"], dtype=float).reshape(n, n),
        T=int(payload["T"]),
        S=np.asarray(payload["S"], dtype=np.int64),
        planes=np.asarray(payload["I"], dtype=np.int64),
        eta=np.asarray(payload["eta"], dtype=float),
        c=float(payload["c"]),
    )


def spec_digest(spec: InducedMapSpec) -> str:
    canonical = json.dumps(spec_payload(spec), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def write_spec(spec: InducedMapSpec, path: Path) -> Path:
    return write_json(spec_payload(spec), path)


def read_spec(path: Path) -> InducedMapSpec:
    return spec_from_payload(json.loads(Path(path).read_text()))


def write_matrix_csv(matrix: JacobianMatrix | np.ndarray, path: Path) -> Path:
    values = matrix.D if isinstance(matrix, JacobianMatrix) else np.asarray(matrix, dtype=float)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(values).to_csv(path, header=False, index=False, float_format=FLOAT_FORMAT)
    return path


def read_matrix_csv(path: Path) -> np.ndarray:
    return pd.read_csv(path, header=None, float_precision="round_trip").to_numpy(dtype=float)


def matrix_envelope(
    matrix: JacobianMatrix,
    n: int,
    seed: int | None = None,
    spec: InducedMapSpec | None = None,
) -> dict[str, Any]:
    return {
        "schema_version": DEFAULT_CONFIG.schema_version,
        "n": n,
        "N": matrix.N,
        "seed": seed,
        "spec_hash": spec_digest(spec) if spec is not None else None,
        "entries": matrix.D.reshape(-1).tolist(),
    }


def report_payload(report: Any) -> dict[str, Any]:
    """Dataclass (or mapping) to a JSON-safe dict, spelling non-finite floats out."""

    payload = asdict(report) if is_dataclass(report) else dict(report)
    return _json_safe(payload)


def write_json(payload: Mapping[str, Any], path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_json_safe(dict(payload)), indent=2, sort_keys=True) + "\n")
    return path


def _json_safe(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {str(key): _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        number = float(value)
        if math.isnan(number):
            return "nan"
        if math.isinf(number):
            return "inf" if number > 0 else "-inf"
        return number
    return value


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return path


def _read_frame(path: Path) -> pd.DataFrame:
    return pd.read_csv(path, float_precision="round_trip")


def _require_columns(frame: pd.DataFrame, columns: tuple[str, ...]) -> None:
    missing = set(columns).difference(frame.columns)
    if missing:
        raise KeyError(f"Missing required columns: {sorted(missing)}")
