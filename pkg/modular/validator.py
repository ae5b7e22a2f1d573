"""
Input validation for states, operators and run parameters.
Ensures every input is valid before any polynomial is built.
"""

import math
from typing import Any, Dict, Sequence, Tuple

import numpy as np


class StateValidator:
    """Validates density matrices, pure states and subsystem layouts."""

    # Tolerances
    HERMITIAN_TOL = 1e-10
    TRACE_TOL = 1e-9
    NEGATIVE_TOL = 1e-10
    UNIT_NORM_TOL = 1e-10

    @staticmethod
    def validate_density(matrix: np.ndarray) -> Tuple[bool, str]:
        """
        Validate the structural invariants of a density matrix.

        Positivity needs the spectrum and is checked separately by
        validate_spectrum once the eigendecomposition exists.

        Args:
            matrix: Candidate density matrix

        Returns:
            Tuple of (is_valid, error_message)
        """
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            return False, f"Shape: density matrix must be square, got {matrix.shape}"
        if matrix.shape[0] == 0:
            return False, "Shape: density matrix is empty"

        asymmetry = float(np.max(np.abs(matrix - matrix.conj().T)))
        if asymmetry > StateValidator.HERMITIAN_TOL:
            return False, (
                f"Hermiticity: max |M - M^dagger| = {asymmetry:.3e} "
                f"exceeds {StateValidator.HERMITIAN_TOL:.0e}"
            )

        trace = complex(np.trace(matrix))
        if abs(trace - 1.0) > StateValidator.TRACE_TOL:
            return False, (
                f"Trace: trace = {trace.real:.12g} differs from 1 by more than "
                f"{StateValidator.TRACE_TOL:.0e}"
            )

        return True, ""

    @staticmethod
    def validate_spectrum(eigenvalues: np.ndarray) -> Tuple[bool, str]:
        """Check that no eigenvalue is negative beyond tolerance."""
        smallest = float(np.min(eigenvalues))
        if smallest < -StateValidator.NEGATIVE_TOL:
            return False, (
                f"Positivity: smallest eigenvalue {smallest:.3e} is below "
                f"-{StateValidator.NEGATIVE_TOL:.0e}"
            )
        return True, ""

    @staticmethod
    def validate_pure(amplitudes: np.ndarray, dims: Sequence[int]) -> Tuple[bool, str]:
        """
        Validate a pure state vector against its subsystem layout.

        Args:
            amplitudes: State vector
            dims: Subsystem dimensions in tensor order

        Returns:
            Tuple of (is_valid, error_message)
        """
        if amplitudes.ndim != 1:
            return False, f"Shape: amplitudes must be a vector, got shape {amplitudes.shape}"

        is_valid, msg = StateValidator.validate_dims(dims, amplitudes.size)
        if not is_valid:
            return is_valid, msg

        norm = float(np.linalg.norm(amplitudes))
        if abs(norm - 1.0) > StateValidator.UNIT_NORM_TOL:
            return False, (
                f"Normalization: state norm {norm:.12g} differs from 1 by more than "
                f"{StateValidator.UNIT_NORM_TOL:.0e}"
            )
        return True, ""

    @staticmethod
    def validate_dims(dims: Sequence[int], size: int) -> Tuple[bool, str]:
        """Check that subsystem dimensions are positive and multiply to size."""
        if len(dims) == 0:
            return False, "Shape: subsystem dims must not be empty"
        for d in dims:
            if int(d) != d or d < 1:
                return False, f"Shape: subsystem dims must be positive integers, got {list(dims)}"
        product = int(np.prod([int(d) for d in dims]))
        if product != size:
            return False, f"Shape: subsystem dims {list(dims)} multiply to {product}, expected {size}"
        return True, ""


class ParameterValidator:
    """Validates numeric run parameters before an experiment starts."""

    # Validation ranges
    KAPPA_MIN = 1.0
    KAPPA_MAX = 1e6
    GRID_MIN = 2
    GRID_MAX = 1_000_000
    TIME_MAX = 1e4
    BITS_MIN = 1
    BITS_MAX = 52
    WORKERS_MAX = 64

    @staticmethod
    def validate(parameters: Dict[str, Any]) -> Tuple[bool, str]:
        """
        Validate every parameter present in the dictionary.

        Only keys that are present are checked; each experiment passes the
        parameters it actually uses.

        Args:
            parameters: Mapping of parameter name to value

        Returns:
            Tuple of (is_valid, error_message)
        """
        checks = {
            "epsilon": ParameterValidator._validate_unit_interval,
            "delta": ParameterValidator._validate_unit_interval,
            "kappa": ParameterValidator._validate_kappa,
            "grid": ParameterValidator._validate_grid,
            "time": ParameterValidator._validate_time,
            "t1": ParameterValidator._validate_time,
            "t2": ParameterValidator._validate_time,
            "seed": ParameterValidator._validate_seed,
            "degree_cap": ParameterValidator._validate_positive_int,
            "workers": ParameterValidator._validate_workers,
            "bits": ParameterValidator._validate_bits,
            "zero_tol": ParameterValidator._validate_zero_tol,
        }
        for name, value in parameters.items():
            if name not in checks or value is None:
                continue
            is_valid, msg = checks[name](name, value)
            if not is_valid:
                return is_valid, msg
        return True, ""

    @staticmethod
    def _validate_finite(name: str, value: Any) -> Tuple[bool, str]:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False, f"{name} must be a number, got {value!r}"
        if not math.isfinite(value):
            return False, f"{name} must be finite, got {value!r}"
        return True, ""

    @staticmethod
    def _validate_unit_interval(name: str, value: Any) -> Tuple[bool, str]:
        is_valid, msg = ParameterValidator._validate_finite(name, value)
        if not is_valid:
            return is_valid, msg
        if not 0.0 < value < 1.0:
            return False, f"{name} must be in (0, 1), got {value}"
        return True, ""

    @staticmethod
    def _validate_kappa(name: str, value: Any) -> Tuple[bool, str]:
        is_valid, msg = ParameterValidator._validate_finite(name, value)
        if not is_valid:
            return is_valid, msg
        if not ParameterValidator.KAPPA_MIN < value <= ParameterValidator.KAPPA_MAX:
            return False, (
                f"{name} must be in ({ParameterValidator.KAPPA_MIN:g}, "
                f"{ParameterValidator.KAPPA_MAX:g}], got {value}"
            )
        return True, ""

    @staticmethod
    def _validate_grid(name: str, value: Any) -> Tuple[bool, str]:
        if isinstance(value, bool) or not isinstance(value, int):
            return False, f"{name} must be an integer, got {value!r}"
        if not ParameterValidator.GRID_MIN <= value <= ParameterValidator.GRID_MAX:
            return False, (
                f"{name} must be between {ParameterValidator.GRID_MIN} and "
                f"{ParameterValidator.GRID_MAX}, got {value}"
            )
        return True, ""

    @staticmethod
    def _validate_time(name: str, value: Any) -> Tuple[bool, str]:
        is_valid, msg = ParameterValidator._validate_finite(name, value)
        if not is_valid:
            return is_valid, msg
        if abs(value) > ParameterValidator.TIME_MAX:
            return False, f"|{name}| must be at most {ParameterValidator.TIME_MAX:g}, got {value}"
        return True, ""

    @staticmethod
    def _validate_seed(name: str, value: Any) -> Tuple[bool, str]:
        if isinstance(value, bool) or not isinstance(value, int) or value < 0:
            return False, f"{name} must be a non-negative integer, got {value!r}"
        return True, ""

    @staticmethod
    def _validate_positive_int(name: str, value: Any) -> Tuple[bool, str]:
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            return False, f"{name} must be a positive integer, got {value!r}"
        return True, ""

    @staticmethod
    def _validate_workers(name: str, value: Any) -> Tuple[bool, str]:
        is_valid, msg = ParameterValidator._validate_positive_int(name, value)
        if not is_valid:
            return is_valid, msg
        if value > ParameterValidator.WORKERS_MAX:
            return False, f"{name} must be at most {ParameterValidator.WORKERS_MAX}, got {value}"
        return True, ""

    @staticmethod
    def _validate_bits(name: str, value: Any) -> Tuple[bool, str]:
        if isinstance(value, bool) or not isinstance(value, int):
            return False, f"{name} must be an integer, got {value!r}"
        if not ParameterValidator.BITS_MIN <= value <= ParameterValidator.BITS_MAX:
            return False, (
                f"{name} must be between {ParameterValidator.BITS_MIN} and "
                f"{ParameterValidator.BITS_MAX}, got {value}"
            )
        return True, ""

    @staticmethod
    def _validate_zero_tol(name: str, value: Any) -> Tuple[bool, str]:
        is_valid, msg = ParameterValidator._validate_finite(name, value)
        if not is_valid:
            return is_valid, msg
        if not 0.0 <= value < 1e-3:
            return False, f"{name} must be in [0, 1e-3), got {value}"
        return True, ""
