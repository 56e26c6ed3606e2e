"""Generalized Stiefel manifold {W : W^H A_tilde W = I_R}.

The control filter of the radiation-constrained algorithm lives on this
manifold, with A_tilde the scaled radiation matrix (Hermitian positive
definite). This module provides membership certification, the
tangent-space projection (a Sylvester solve), the weighted-QR retraction,
and construction of random feasible starting points.
"""

import logging
from dataclasses import dataclass

import numpy as np

from . import cxla
from .acoustics import RadiationModel
from .errors import FeasibilityError, RankError, ShapeError
from .validation import as_complex_matrix

__all__ = [
    "FEASIBILITY_TOL",
    "StiefelPoint",
    "feasibility_residual",
    "project_tangent",
    "retract",
    "feasible_point",
]

logger = logging.getLogger(__name__)

# Residual bound certified at construction and after every retraction.
FEASIBILITY_TOL = 1e-8


def feasibility_residual(W, model: RadiationModel):
    """||W^H A_tilde W - I||_F, the membership defect of W."""
    R = W.shape[1]
    gram = W.conj().T @ (model.A_tilde @ W)
    return float(np.linalg.norm(gram - np.eye(R)))


@dataclass(frozen=True)
class StiefelPoint:
    """A control filter W certified to lie on the manifold.

    The feasibility residual is computed once at construction and cached;
    points whose residual exceeds FEASIBILITY_TOL are rejected.
    """

    W: np.ndarray
    model: RadiationModel
    residual: float

    @classmethod
    def create(cls, W, model: RadiationModel):
        W = as_complex_matrix(W, "W")
        L, R = W.shape
        if L != model.size:
            raise ShapeError(
                f"W has {L} rows but the radiation model is {model.size}x{model.size}"
            )
        if L < R:
            raise FeasibilityError(
                f"W must be tall (L >= R) for W^H A_tilde W = I, got {W.shape}"
            )
        res = feasibility_residual(W, model)
        if res > FEASIBILITY_TOL:
            raise FeasibilityError(
                f"feasibility residual {res:.3e} exceeds {FEASIBILITY_TOL:.1e}"
            )
        return cls(W=W, model=model, residual=res)

    @property
    def shape(self):
        return self.W.shape


def project_tangent(point: StiefelPoint, U):
    """Orthogonal projection of U onto the tangent space at the point.

    Computes V = U - A_tilde W H, where the Hermitian H solves the
    Sylvester equation S H + H S = B + B^H with S = W^H A_tilde^H A_tilde W
    and B = W^H A_tilde U. The result satisfies the tangency condition
    W^H A_tilde V + V^H A_tilde W = 0 up to rounding.
    """
    W = point.W
    U = as_complex_matrix(U, "U", shape=W.shape)
    AW = point.model.A_tilde @ W
    # A_tilde is Hermitian, so W^H A_tilde^H A_tilde W = (AW)^H (AW)
    S = AW.conj().T @ AW
    B = AW.conj().T @ U
    H = cxla.sylvester_spd(S, B, "W^H A_tilde^2 W")
    return U - AW @ H


def retract(point: StiefelPoint, V) -> StiefelPoint:
    """Weighted-QR retraction: sqrt(A_tilde)^{-1} qf(sqrt(A_tilde)(W + V)).

    qf is the Q-factor with the positive-diagonal convention, so a zero
    step returns the same point up to rounding. Rank deficiency of the
    weighted sum raises RankError; callers fall back (see algorithms).
    """
    W = point.W
    V = as_complex_matrix(V, "V", shape=W.shape)
    model = point.model
    T = model.sqrt_A_tilde @ (W + V)
    Q, _ = cxla.qr_positive(T, "sqrt(A_tilde)(W+V)")
    return StiefelPoint.create(model.inv_sqrt_A_tilde @ Q, model)


def feasible_point(model: RadiationModel, L, R, seed) -> StiefelPoint:
    """Random feasible starting point.

    Draws a seeded standard complex Gaussian L x R matrix B and returns
    sqrt(A_tilde)^{-1} qf(sqrt(A_tilde) B). Identical seeds give bitwise
    identical results. Rank deficiency of the random draw is
    astronomically improbable; if it happens the seed is bumped by one
    and the draw repeated (logged).
    """
    if L < R:
        raise FeasibilityError(f"need L >= R, got L={L}, R={R}")
    attempt = int(seed)
    while True:
        rng = np.random.Generator(np.random.Philox(key=attempt))
        B = (rng.standard_normal((L, R)) + 1j * rng.standard_normal((L, R)))
        B *= np.sqrt(0.5)
        try:
            Q, _ = cxla.qr_positive(model.sqrt_A_tilde @ B, "sqrt(A_tilde) B")
        except RankError:
            logger.warning("feasible_point: rank-deficient draw at seed %d, retrying",
                           attempt)
            attempt += 1
            continue
        return StiefelPoint.create(model.inv_sqrt_A_tilde @ Q, model)
