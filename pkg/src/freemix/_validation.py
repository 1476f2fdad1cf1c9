"""Input validation helpers shared across the package."""
import numbers

import numpy as np


def check_beta(beta):
    if beta not in (1, 2):
        raise ValueError(f"beta must be 1 (real) or 2 (complex), got {beta!r}")
    return int(beta)


def check_positive_int(value, name, minimum=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(value).__name__}")
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return int(value)


def as_matrix(a):
    """Return the dense array behind `a` (a MatrixSample or array-like)."""
    entries = getattr(a, "entries", a)
    arr = np.asarray(entries)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {arr.shape}")
    return arr


def check_square(a):
    arr = as_matrix(a)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def check_hermitian(a, atol=1e-12):
    arr = check_square(a)
    if not np.allclose(arr, arr.conj().T, rtol=0.0, atol=atol):
        raise ValueError("matrix is not Hermitian")
    return arr


def check_same_grid(a, b):
    ga, gb = np.asarray(a.grid), np.asarray(b.grid)
    if ga.shape != gb.shape or not np.array_equal(ga, gb):
        raise ValueError("density curves are defined on different grids")
    return ga
