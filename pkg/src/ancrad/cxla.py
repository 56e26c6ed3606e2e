"""Dense complex linear algebra at small fixed sizes.

Validated wrappers around LAPACK (through numpy.linalg) plus the one
solver numpy does not ship: the Hermitian Sylvester equation used by the
tangent-space projection. Matrices here are at most a few dozen rows, so
everything is direct and deterministic for fixed inputs on a fixed
platform; cross-platform bit-exactness is not promised.

Every operation treats "Hermitian" inputs as (H + H^H)/2 after checking
the deviation, because floating-point drift otherwise breaks downstream
positive-definiteness assumptions.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DefinitenessError, NumericError, RankError, ShapeError
from .validation import as_complex_matrix, check_hermitian

__all__ = [
    "HermitianFactorization",
    "herm_eig",
    "spectral_norm",
    "herm_sqrt",
    "qr_positive",
    "sylvester_spd",
]


@dataclass(frozen=True)
class HermitianFactorization:
    """Eigendecomposition H = Q diag(eigenvalues) Q^H.

    eigenvalues are real and ascending; eigenvectors has orthonormal
    columns (unitary for full decompositions).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def herm_eig(H, name="H") -> HermitianFactorization:
    """Eigendecompose a Hermitian matrix.

    The input is symmetrized as (H + H^H)/2 after verifying the deviation
    is within 1e-10 relative. Eigenvalues come back ascending.
    """
    H = as_complex_matrix(H, name)
    Hs = check_hermitian(H, name)
    try:
        w, q = np.linalg.eigh(Hs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - tiny dense inputs
        raise NumericError(f"herm_eig({name}): {exc}") from exc
    return HermitianFactorization(eigenvalues=w, eigenvectors=q)


def spectral_norm(H, name="H"):
    """Largest eigenvalue of a Hermitian PSD matrix (its 2-norm).

    Raises DefinitenessError if the smallest eigenvalue is materially
    negative, since the PSD reading of the norm would then be wrong.
    """
    fac = herm_eig(H, name)
    lo, hi = fac.eigenvalues[0], fac.eigenvalues[-1]
    if lo < -1e-10 * max(hi, 0.0) and lo < 0.0:
        raise DefinitenessError(
            f"spectral_norm({name}): matrix is not PSD (min eigenvalue {lo:.3e})"
        )
    return float(hi)


def herm_sqrt(H, name="H"):
    """Principal square root and inverse square root of a Hermitian PD matrix.

    Returns
    -------
    (sqrtH, inv_sqrtH) : pair of ndarray
        Both Hermitian PD; sqrtH @ sqrtH reconstructs H and
        inv_sqrtH @ sqrtH is the identity, to ~1e-9 relative.
    """
    fac = herm_eig(H, name)
    w, q = fac.eigenvalues, fac.eigenvectors
    if w[0] <= 0.0:
        raise DefinitenessError(
            f"herm_sqrt({name}): matrix is not PD (min eigenvalue {w[0]:.3e})"
        )
    r = np.sqrt(w)
    sqrtH = (q * r) @ q.conj().T
    inv_sqrtH = (q / r) @ q.conj().T
    # products of the form Q f(L) Q^H are Hermitian only up to rounding
    sqrtH = 0.5 * (sqrtH + sqrtH.conj().T)
    inv_sqrtH = 0.5 * (inv_sqrtH + inv_sqrtH.conj().T)
    return sqrtH, inv_sqrtH


def qr_positive(B, name="B"):
    """Reduced QR factorization with strictly positive real R diagonal.

    The Q-factor is phase-normalized column by column so that diag(R) is
    real and positive; the imaginary parts of the diagonal are exactly
    zeroed. Rank deficiency (any |R_ii| <= 1e-12 * ||B||_F) raises
    RankError.
    """
    B = as_complex_matrix(B, name)
    rows, cols = B.shape
    if rows < cols:
        raise ShapeError(f"qr_positive({name}): need rows >= cols, got {B.shape}")
    q, r = np.linalg.qr(B, mode="reduced")
    diag = np.diagonal(r).copy()
    scale = np.linalg.norm(B)
    if np.any(np.abs(diag) <= 1e-12 * max(scale, 1e-300)):
        worst = float(np.min(np.abs(diag)))
        raise RankError(
            f"qr_positive({name}): rank deficient (min |R_ii| = {worst:.3e})"
        )
    phase = diag / np.abs(diag)
    q = q * phase[np.newaxis, :]
    r = phase.conj()[:, np.newaxis] * r
    idx = np.arange(cols)
    r[idx, idx] = r[idx, idx].real
    return q, r


def sylvester_spd(S, B, name="S"):
    """Solve S H + H S = B + B^H for the unique Hermitian H, with S Hermitian PD.

    Uses the eigendecomposition S = Q L Q^H, dividing the rotated
    right-hand side elementwise by (l_i + l_j). The result is symmetrized
    exactly, so ||H - H^H||_F == 0.
    """
    S = as_complex_matrix(S, name)
    B = as_complex_matrix(B, "B")
    if S.shape != B.shape or S.shape[0] != S.shape[1]:
        raise ShapeError(
            f"sylvester_spd: S and B must be square of equal size, "
            f"got {S.shape} and {B.shape}"
        )
    fac = herm_eig(S, name)
    w, q = fac.eigenvalues, fac.eigenvectors
    if w[0] <= 0.0:
        raise DefinitenessError(
            f"sylvester_spd({name}): matrix is not PD (min eigenvalue {w[0]:.3e}); "
            f"the pairwise sums l_i + l_j could vanish"
        )
    rhs = B + B.conj().T
    m = q.conj().T @ rhs @ q
    m /= w[:, np.newaxis] + w[np.newaxis, :]
    H = q @ m @ q.conj().T
    return 0.5 * (H + H.conj().T)
