"""
JSON matrix and state files.

Schema: {"kind": "density" | "pure" | "operator", "dims": [d_1, ...],
"entries": [[re, im], ...]} in row-major order. A pure state has prod(dims)
entries, a matrix prod(dims)^2. A file without "kind" is an operator.
"""

import hashlib
import json
from pathlib import Path
from typing import Any, Dict, Sequence, Tuple, Union

import numpy as np

from modular.encoding import DensityMatrix, PureState, density_from_state, purify, validate_density

KINDS = ("density", "pure", "operator")

PathLike = Union[str, Path]


def file_digest(path: PathLike) -> str:
    """SHA-256 of the file contents, hex encoded."""
    digest = hashlib.sha256()
    with open(path, 'rb') as f:
        for chunk in iter(lambda: f.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def combined_digest(digests: Sequence[str]) -> str:
    """One digest for a set of inputs, or an empty string without inputs."""
    if not digests:
        return ""
    return hashlib.sha256("".join(digests).encode('ascii')).hexdigest()


def _field(data: Dict[str, Any], name: str, path: PathLike) -> Any:
    if name not in data:
        raise ValueError(f"{path}: missing field '{name}'")
    return data[name]


def read_matrix_file(path: PathLike) -> Tuple[str, Tuple[int, ...], np.ndarray]:
    """
    Parse a matrix or state file.

    Returns:
        Tuple of (kind, dims, array) where array is a vector for pure states

    Raises:
        FileNotFoundError: If the file does not exist
        ValueError: Naming the file and the offending field
    """
    with open(path, 'r', encoding='utf-8') as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: not valid JSON ({e.msg} at line {e.lineno})") from e
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a JSON object")

    kind = data.get("kind", "operator")
    if kind not in KINDS:
        raise ValueError(f"{path}: field 'kind' must be one of {KINDS}, got {kind!r}")

    dims = _field(data, "dims", path)
    if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 1 for d in dims):
        raise ValueError(f"{path}: field 'dims' must be a non-empty list of positive integers")
    size = int(np.prod(dims))

    entries = _field(data, "entries", path)
    try:
        values = np.array(entries, dtype=float)
    except (TypeError, ValueError) as e:
        raise ValueError(f"{path}: field 'entries' must be a list of [re, im] pairs") from e
    if values.ndim != 2 or values.shape[1] != 2:
        raise ValueError(f"{path}: field 'entries' must be a list of [re, im] pairs")

    expected = size if kind == "pure" else size * size
    if values.shape[0] != expected:
        raise ValueError(
            f"{path}: field 'entries' has {values.shape[0]} values, dims {dims} need {expected}"
        )
    array = values[:, 0] + 1j * values[:, 1]
    if kind != "pure":
        array = array.reshape(size, size)
    return kind, tuple(dims), array


def load_density(path: PathLike, zero_tol: float) -> DensityMatrix:
    """Density matrix from a density or pure-state file."""
    kind, dims, array = read_matrix_file(path)
    if kind == "pure":
        return density_from_state(PureState(array, dims), zero_tol)
    if kind == "operator":
        raise ValueError(f"{path}: expected a state, got kind 'operator'")
    return validate_density(array, zero_tol, dims)


def load_pure(path: PathLike) -> PureState:
    """Pure state from a pure-state file; a density file is purified."""
    kind, dims, array = read_matrix_file(path)
    if kind == "pure":
        return PureState(array, dims)
    if kind == "operator":
        raise ValueError(f"{path}: expected a state, got kind 'operator'")
    return purify(validate_density(array))


def load_operator(path: PathLike) -> np.ndarray:
    """Square matrix from an operator or density file."""
    kind, _, array = read_matrix_file(path)
    if kind == "pure":
        raise ValueError(f"{path}: expected a matrix, got kind 'pure'")
    return array


def matrix_document(array: np.ndarray, kind: str, dims: Sequence[int]) -> Dict[str, Any]:
    """Inverse of read_matrix_file, as a JSON-ready dictionary."""
    if kind not in KINDS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    flat = np.asarray(array, dtype=np.complex128).reshape(-1)
    return {
        "kind": kind,
        "dims": [int(d) for d in dims],
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def write_matrix_file(path: PathLike, array: np.ndarray, kind: str, dims: Sequence[int]) -> None:
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(matrix_document(array, kind, dims), f)
