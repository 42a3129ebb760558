"""Input validation helpers shared by every module."""

import numbers

import numpy as np


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class SizeError(ValueError):
    """A requested enumeration exceeds its configured cap."""


class SolverError(RuntimeError):
    """A solver produced non-finite iterates."""


def check_vector(x, name="x", allow_empty=False):
    """Return ``x`` as a finite 1-d float array."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0 and not allow_empty:
        raise DomainError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def check_matrix(A, name="A"):
    """Return ``A`` as a finite 2-d float array."""
    arr = np.asarray(A, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise DomainError(f"{name} must be a non-empty 2-d array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite entries")
    return arr


def check_positive(value, name):
    if not isinstance(value, numbers.Real) or not np.isfinite(value) or value <= 0:
        raise DomainError(f"{name} must be a positive finite real, got {value!r}")
    return float(value)


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < minimum:
        raise DomainError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return int(value)


def check_system(A, b):
    """Validate a linear system ``A x = b`` and return float arrays."""
    A = check_matrix(A, "A")
    b = check_vector(b, "b")
    if b.shape[0] != A.shape[0]:
        raise DomainError(f"b has length {b.shape[0]} but A has {A.shape[0]} rows")
    return A, b
