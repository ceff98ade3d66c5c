"""Input validation helpers shared across modules."""

import numpy as np

from .exceptions import DimensionError, NonFiniteError


def as_float_array(x, name="array", ndim=None):
    """Convert ``x`` to a finite float64 ndarray.

    Raises :class:`NonFiniteError` on NaN/Inf and :class:`DimensionError`
    when ``ndim`` is given and does not match.
    """
    arr = np.asarray(x, dtype=float)
    if ndim is not None and arr.ndim != ndim:
        raise DimensionError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains non-finite values")
    return arr


def as_matrix(x, name="matrix", shape=None):
    """Return ``x`` as a finite 2-D float array, optionally checking shape."""
    arr = np.atleast_2d(as_float_array(x, name))
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if shape is not None:
        for axis, (got, want) in enumerate(zip(arr.shape, shape)):
            if want is not None and got != want:
                raise DimensionError(
                    f"{name} has shape {arr.shape}, expected {shape} (axis {axis})"
                )
    return arr


def as_vector(x, name="vector", size=None):
    arr = as_float_array(x, name).reshape(-1)
    if size is not None and arr.size != size:
        raise DimensionError(f"{name} must have {size} entries, got {arr.size}")
    return arr


def check_positive(value, name):
    value = float(value)
    if not np.isfinite(value):
        raise NonFiniteError(f"{name} must be finite")
    if value <= 0:
        raise ValueError(f"{name} must be > 0, got {value}")
    return value


def check_symmetric(m, name="matrix", tol=1e-12):
    m = as_matrix(m, name)
    if m.shape[0] != m.shape[1]:
        raise DimensionError(f"{name} must be square, got {m.shape}")
    scale = max(1.0, np.abs(m).max())
    if np.abs(m - m.T).max() > tol * scale:
        raise ValueError(f"{name} must be symmetric")
    return m
