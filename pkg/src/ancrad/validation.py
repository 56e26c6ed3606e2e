"""Input validation helpers for complex-valued arrays.

scikit-learn's stock validators reject complex dtypes, so the estimators
and kernels in this package use these lightweight equivalents instead.
They coerce to contiguous ndarrays, check shapes and finiteness, and fail
with the typed errors from :mod:`ancrad.errors`.
"""

import math

import numpy as np

from .errors import DomainError, ShapeError


def as_complex_matrix(a, name="matrix", shape=None):
    """Coerce `a` to a finite 2-D complex128 ndarray.

    Parameters
    ----------
    a : array_like
    name : str
        Used in error messages.
    shape : tuple of int or None
        Exact required shape; entries set to -1 are unconstrained.
    """
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2:
        raise ShapeError(f"{name}: expected 2-D array, got ndim={m.ndim}")
    if shape is not None:
        for got, want in zip(m.shape, shape):
            if want != -1 and got != want:
                raise ShapeError(f"{name}: expected shape {shape}, got {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise DomainError(f"{name}: contains non-finite entries")
    return m


def as_complex_vector(a, name="vector", length=None):
    """Coerce `a` to a finite 1-D complex128 ndarray."""
    v = np.asarray(a, dtype=np.complex128)
    if v.ndim != 1:
        raise ShapeError(f"{name}: expected 1-D array, got ndim={v.ndim}")
    if length is not None and v.shape[0] != length:
        raise ShapeError(f"{name}: expected length {length}, got {v.shape[0]}")
    if not np.all(np.isfinite(v.view(np.float64))):
        raise DomainError(f"{name}: contains non-finite entries")
    return v


def check_square(m, name="matrix"):
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeError(f"{name}: expected square matrix, got shape {m.shape}")
    return m


def check_hermitian(m, name="matrix", rtol=1e-10):
    """Verify ||H - H^H||_F <= rtol*||H||_F, then return (H + H^H)/2.

    Symmetrizing on entry keeps floating-point drift from breaking
    positive-definiteness assumptions downstream.
    """
    check_square(m, name)
    nrm = np.linalg.norm(m)
    dev = np.linalg.norm(m - m.conj().T)
    if dev > rtol * max(nrm, 1e-300):
        raise DomainError(
            f"{name}: not Hermitian within tolerance "
            f"(deviation {dev:.3e}, bound {rtol * nrm:.3e})"
        )
    return 0.5 * (m + m.conj().T)


def as_real_scalar(x, name="value", minimum=None, maximum=None,
                   inclusive_min=True, inclusive_max=True):
    """Validate a finite real scalar, with optional open/closed bounds."""
    try:
        v = float(x)
    except (TypeError, ValueError):
        raise DomainError(f"{name}: expected a real scalar, got {x!r}")
    if not math.isfinite(v):
        raise DomainError(f"{name}: must be finite, got {v!r}")
    if minimum is not None:
        ok = v >= minimum if inclusive_min else v > minimum
        if not ok:
            op = ">=" if inclusive_min else ">"
            raise DomainError(f"{name}: must be {op} {minimum}, got {v}")
    if maximum is not None:
        ok = v <= maximum if inclusive_max else v < maximum
        if not ok:
            op = "<=" if inclusive_max else "<"
            raise DomainError(f"{name}: must be {op} {maximum}, got {v}")
    return v
