"""Plain-text file formats: CSV matrices with JSON sidecars and manifests.

Numbers are written with ``%.17g`` (round-trip exact) and JSON with sorted
keys, so writing the same data twice gives byte-identical files.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .core import ResponseMatrix, WavelengthGrid
from .errors import BadConfig, DimensionMismatch, IoError

FLOAT_FMT = "%.17g"
X_FILE = "x.csv"
Y_FILE = "y.csv"
MANIFEST_FILE = "manifest.json"
RESPONSE_FILE = "response.csv"


def _atomic_write(path: Path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_bytes(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_json(path, obj) -> None:
    _atomic_write(Path(path), dumps_json(obj).encode("utf-8"))


def read_json(path) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as exc:
        raise IoError(f"missing file {path}") from exc
    except json.JSONDecodeError as exc:
        raise IoError(f"{path} is not valid JSON: {exc}") from exc


def format_matrix(A) -> str:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    return "".join(",".join(FLOAT_FMT % v for v in row) + "\n" for row in A)


def write_matrix(path, A) -> None:
    """One row per line, comma separated, no header."""
    _atomic_write(Path(path), format_matrix(A).encode("ascii"))


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise IoError(f"missing file {path}")
    try:
        A = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except ValueError as exc:
        raise IoError(f"{path} is not a numeric CSV: {exc}") from exc
    return A


def sidecar_path(csv_path) -> Path:
    return Path(csv_path).with_suffix(".json")


def save_response(R: ResponseMatrix, path, grid: WavelengthGrid | None = None) -> None:
    """Write ``R`` as a K x L CSV plus ``{source_id, K, L, grid}`` sidecar."""
    grid = grid or WavelengthGrid.index(R.cols)
    if grid.count != R.cols:
        raise DimensionMismatch(f"grid has {grid.count} points but R has {R.cols} columns")
    write_matrix(path, R.entries)
    write_json(sidecar_path(path), {"source_id": R.source_id, "K": R.rows, "L": R.cols,
                                    "grid": grid.to_dict()})


def load_response(path) -> tuple[ResponseMatrix, WavelengthGrid]:
    side = sidecar_path(path)
    if not side.is_file():
        raise BadConfig(f"response matrix {path} has no sidecar {side.name}")
    meta = read_json(side)
    E = read_matrix(path)
    if E.shape != (meta.get("K"), meta.get("L")):
        raise DimensionMismatch(f"{path} is {E.shape}, sidecar says {(meta.get('K'), meta.get('L'))}")
    grid = WavelengthGrid.from_dict(meta["grid"]) if "grid" in meta else WavelengthGrid.index(E.shape[1])
    return ResponseMatrix(E, str(meta.get("source_id", "unspecified"))), grid


def save_dataset(out_dir, X, Y, manifest: dict) -> Path:
    """Write ``x.csv`` (n x L), ``y.csv`` (n x K) and ``manifest.json``."""
    out = Path(out_dir)
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    if len(X) != len(Y):
        raise DimensionMismatch(f"{len(X)} spectra but {len(Y)} readouts")
    write_matrix(out / X_FILE, X)
    write_matrix(out / Y_FILE, Y)
    write_json(out / MANIFEST_FILE, {**manifest, "n_rows": len(X), "L": X.shape[1], "K": Y.shape[1]})
    return out


def load_dataset(path) -> tuple[np.ndarray | None, np.ndarray, dict]:
    """Load a dataset directory.  ``x.csv`` is optional (unlabeled readouts)."""
    d = Path(path)
    if not d.is_dir():
        raise IoError(f"dataset directory {d} does not exist")
    Y = read_matrix(d / Y_FILE)
    X = read_matrix(d / X_FILE) if (d / X_FILE).is_file() else None
    manifest = read_json(d / MANIFEST_FILE) if (d / MANIFEST_FILE).is_file() else {}
    if X is not None and len(X) != len(Y):
        raise DimensionMismatch(f"{d}: {len(X)} spectra but {len(Y)} readouts")
    return X, Y, manifest
