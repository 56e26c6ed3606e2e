"""Adaptive control-filter update laws.

Three variants of the normalized LMS family for a frequency-domain
multichannel feedforward controller y = W x:

* plain NLMS, minimizing error power at the monitoring microphones plus
  a small driving-signal regularizer;
* penalty NLMS, adding a weighted exterior-radiation penalty to the cost;
* Riemannian NLMS, which instead constrains the radiated power exactly by
  updating W on the generalized Stiefel manifold W^H A_tilde W = I.

A note on gradient scaling shared by all three: the flat updates use the
half-gradient (G^H e + gamma W x) x^H without a leading 2, while the
Riemannian variant doubles the gradient and carries the compensating 2 in
its step-size denominator. Both conventions give the same effective step.

The estimator classes follow the scikit-learn protocol: hyperparameters
in __init__, learned state in trailing-underscore attributes, fit /
partial_fit / predict, plus the finer-grained control / update pair the
experiment harness uses to close the acoustic loop around the filter.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from . import cxla
from .acoustics import RadiationModel
from .errors import DomainError, FeasibilityError, RankError
from .manifold import StiefelPoint, feasible_point, project_tangent, retract
from .validation import as_complex_matrix, as_complex_vector, as_real_scalar

__all__ = [
    "sigma_cost",
    "euclid_grad_sigma",
    "safeguard_mute",
    "FrameReport",
    "NlmsControlFilter",
    "PenaltyNlmsControlFilter",
    "RiemannianNlmsControlFilter",
]

# A frame is "silent" (update skipped, step size would blow up) when its
# power falls below this fraction of the running mean power.
SILENT_FRAME_RTOL = 1e-12

# Feasibility drift that aborts a constrained run.
DRIFT_ABORT_TOL = 1e-6

MUTED_UPDATE_POLICIES = ("predicted", "measured", "skip")


def sigma_cost(W, x, d, G, gamma):
    """Frame cost: ||d + G W x||^2 + gamma ||W x||^2."""
    Wx = W @ x
    r = d + G @ Wx
    return float(np.real(r.conj() @ r) + gamma * np.real(Wx.conj() @ Wx))


def euclid_grad_sigma(W, x, e, G, gamma):
    """Half-gradient of the frame cost: (G^H e + gamma W x) x^H.

    `e` must be the error observed for this (W, x) frame. The finite
    difference of sigma_cost along a direction D equals
    2 Re<euclid_grad_sigma, D>.
    """
    v = G.conj().T @ e + gamma * (W @ x)
    return np.outer(v, x.conj())


def safeguard_mute(x, W, G, P_hat):
    """Output-muting safeguard.

    Predicts the primary noise d_hat = P_hat x and the would-be error
    e_hat = d_hat + G W x; if the prediction says the controller makes
    things worse (||e_hat||^2 > ||d_hat||^2), the loudspeakers are muted
    for this frame.

    Returns (y, muted).
    """
    y = W @ x
    d_hat = P_hat @ x
    e_hat = d_hat + G @ y
    if np.real(e_hat.conj() @ e_hat) > np.real(d_hat.conj() @ d_hat):
        return np.zeros_like(y), True
    return y, False


@dataclass
class FrameReport:
    """Diagnostics for one adaptation step."""

    mu: float
    muted: bool
    skipped: bool
    feasibility_residual: Optional[float] = None
    retraction_failed: bool = False


class _BaseControlFilter(BaseEstimator):
    """Shared machinery of the three adaptive filters.

    Subclasses provide _norm_term_matrix() and _apply_update(). State is
    created lazily on the first frame so the number of reference channels
    is taken from the data, as scikit-learn estimators do.
    """

    def __init__(self, G, gamma=0.0, mu0=1.0, P_hat=None, muted_update="predicted"):
        self.G = G
        self.gamma = gamma
        self.mu0 = mu0
        self.P_hat = P_hat
        self.muted_update = muted_update

    # -- lifecycle -------------------------------------------------------

    def _reset(self):
        for attr in ("W_", "n_iter_", "norm_term_", "n_muted_", "n_skipped_"):
            if hasattr(self, attr):
                delattr(self, attr)

    def _ensure_initialized(self, x):
        if hasattr(self, "W_"):
            return
        self._G = as_complex_matrix(self.G, "G")
        as_real_scalar(self.gamma, "gamma", minimum=0.0)
        as_real_scalar(self.mu0, "mu0", minimum=0.0, inclusive_min=False,
                       maximum=2.0, inclusive_max=False)
        if self.muted_update not in MUTED_UPDATE_POLICIES:
            raise DomainError(
                f"muted_update must be one of {MUTED_UPDATE_POLICIES}, "
                f"got {self.muted_update!r}"
            )
        self._P = None
        if self.P_hat is not None:
            self._P = as_complex_matrix(self.P_hat, "P_hat",
                                        shape=(self._G.shape[0], -1))
        L = self._G.shape[1]
        R = x.shape[0]
        self.norm_term_ = cxla.spectral_norm(self._norm_term_matrix(), "norm term")
        self._init_filter(L, R)
        self.n_iter_ = 0
        self.n_muted_ = 0
        self.n_skipped_ = 0
        self._x_power_mean = 0.0
        self._n_power = 0
        self._last_muted = False
        self._step_scale = 1.0

    def _check_fitted(self):
        if not hasattr(self, "W_"):
            raise NotFittedError(
                "this control filter has processed no frames yet; call fit "
                "or control/update first"
            )

    # -- per-frame interface ---------------------------------------------

    def control(self, x):
        """Driving signals for one frame of reference input.

        Applies the muting safeguard when a primary-path estimate P_hat
        was given. Returns (y, muted); the muted flag is remembered so the
        following update() call can apply the configured policy.
        """
        x = as_complex_vector(x, "x")
        self._ensure_initialized(x)
        if self._P is not None:
            y, muted = safeguard_mute(x, self.W_, self._G, self._P)
        else:
            y, muted = self.W_ @ x, False
        self._last_muted = muted
        if muted:
            self.n_muted_ += 1
        return y, muted

    def update(self, x, e):
        """One adaptation step with the measured error `e`.

        `e` is the error recorded while the output of the immediately
        preceding control(x) call was playing. On muted frames the update
        follows the muted_update policy: "predicted" adapts with the
        error that y = W x would have produced, "measured" adapts with
        the microphone signal as is, "skip" freezes the filter.
        """
        x = as_complex_vector(x, "x")
        self._ensure_initialized(x)
        e = as_complex_vector(e, "e", length=self._G.shape[0])
        muted = self._last_muted
        self._last_muted = False

        p = float(np.real(x.conj() @ x))
        silent = p == 0.0 or (
            self._n_power > 0 and p < SILENT_FRAME_RTOL * self._x_power_mean
        )
        if not silent:
            self._n_power += 1
            self._x_power_mean += (p - self._x_power_mean) / self._n_power

        report = FrameReport(mu=0.0, muted=muted, skipped=True,
                             feasibility_residual=self._residual())
        if silent or (muted and self.muted_update == "skip"):
            self.n_skipped_ += 1
            self.n_iter_ += 1
            return report

        if muted and self.muted_update == "predicted":
            e_upd = self._P @ x + self._G @ (self.W_ @ x)
        else:
            e_upd = e

        mu = self._step_size(p)
        self._apply_update(x, e_upd, mu, report)
        report.mu = mu
        report.skipped = False
        report.feasibility_residual = self._residual()
        self.n_iter_ += 1
        return report

    def step(self, x, d):
        """Closed-loop step with an ideal (noise-free) error channel.

        Convenience path used by fit: emits y for the frame, synthesizes
        e = d + G y, and adapts. Returns (y, e, report).
        """
        y, _ = self.control(x)
        e = as_complex_vector(d, "d", length=self._G.shape[0]) + self._G @ y
        report = self.update(x, e)
        return y, e, report

    # -- scikit-learn surface --------------------------------------------

    def fit(self, X, D):
        """Run the adaptation over frames X (n, R) against primary noise D (n, M)."""
        self._reset()
        return self.partial_fit(X, D)

    def partial_fit(self, X, D):
        X = as_complex_matrix(X, "X")
        D = as_complex_matrix(D, "D", shape=(X.shape[0], -1))
        for x, d in zip(X, D):
            self.step(x, d)
        return self

    def predict(self, X):
        """Driving signals Y (n, L) for reference frames X (n, R)."""
        self._check_fitted()
        X = as_complex_matrix(X, "X", shape=(-1, self.W_.shape[1]))
        return X @ self.W_.T

    def transform(self, X):
        return self.predict(X)

    # -- subclass hooks ----------------------------------------------------

    def _step_size(self, x_power):
        return self._step_scale * self.mu0 / (self.norm_term_ * x_power)

    def _residual(self):
        return None

    def _norm_term_matrix(self):
        raise NotImplementedError

    def _init_filter(self, L, R):
        raise NotImplementedError

    def _apply_update(self, x, e_upd, mu, report):
        raise NotImplementedError


class NlmsControlFilter(_BaseControlFilter):
    """Plain multichannel NLMS: W <- W - mu (G^H e + gamma W x) x^H.

    The step size mu = mu0 / (||G^H G + gamma I||_2 ||x||^2) makes the
    update invariant to the overall signal scale.
    """

    def _norm_term_matrix(self):
        G = self._G
        return G.conj().T @ G + self.gamma * np.eye(G.shape[1])

    def _init_filter(self, L, R):
        self.W_ = np.zeros((L, R), dtype=np.complex128)

    def _apply_update(self, x, e_upd, mu, report):
        v = self._G.conj().T @ e_upd + self.gamma * (self.W_ @ x)
        self.W_ = self.W_ - mu * np.outer(v, x.conj())


class PenaltyNlmsControlFilter(_BaseControlFilter):
    """NLMS with an exterior-radiation penalty.

    Adds lam * y^H A y to the cost, giving the update
    W <- W - mu [G^H e + (gamma I + lam A) W x] x^H with the norm term
    extended to ||G^H G + gamma I + lam A||_2. With lam = 0 the update is
    arithmetically identical to plain NLMS, operation for operation.

    Parameters
    ----------
    A : ndarray or RadiationModel
        Radiation matrix defining the penalty quadratic form.
    lam : float
        Penalty weight, >= 0.
    """

    def __init__(self, G, A, lam=0.0, gamma=0.0, mu0=1.0, P_hat=None,
                 muted_update="predicted"):
        super().__init__(G, gamma=gamma, mu0=mu0, P_hat=P_hat,
                         muted_update=muted_update)
        self.A = A
        self.lam = lam

    def _penalty_matrix(self):
        A = self.A.effective if isinstance(self.A, RadiationModel) else self.A
        return np.asarray(A)

    def _norm_term_matrix(self):
        as_real_scalar(self.lam, "lam", minimum=0.0)
        G = self._G
        base = G.conj().T @ G + self.gamma * np.eye(G.shape[1])
        if self.lam == 0.0:
            # keep the lam = 0 path bitwise identical to plain NLMS
            return base
        self._A_mat = self._penalty_matrix()
        return base + self.lam * self._A_mat

    def _init_filter(self, L, R):
        self.W_ = np.zeros((L, R), dtype=np.complex128)

    def _apply_update(self, x, e_upd, mu, report):
        Wx = self.W_ @ x
        v = self._G.conj().T @ e_upd + self.gamma * Wx
        if self.lam != 0.0:
            v = v + self.lam * (self._A_mat @ Wx)
        self.W_ = self.W_ - mu * np.outer(v, x.conj())


class RiemannianNlmsControlFilter(_BaseControlFilter):
    """NLMS constrained to the generalized Stiefel manifold.

    The filter is kept on {W : W^H A_tilde W = I_R}, which pins the
    radiated power to C ||x||^2 for every frame. Each step projects the
    doubled half-gradient onto the tangent space (a small Sylvester
    solve) and retracts with the weighted positive-diagonal QR map; the
    step size carries the compensating factor 2:
    mu = mu0 / (2 ||G^H G + gamma I||_2 ||x||^2).

    A failed retraction (rank-deficient QR input) keeps the previous
    filter and halves the step for the next frame. Feasibility drift
    beyond DRIFT_ABORT_TOL aborts the run; the residual is recomputed at
    every construction so drift cannot go unnoticed.

    Parameters
    ----------
    model : RadiationModel
        Scaled radiation model (its C is the power target).
    init_seed : int
        Seed for the random feasible starting point; there is no zero
        filter on the manifold, which is exactly why the muting safeguard
        matters early in a run.
    """

    def __init__(self, G, model, gamma=0.0, mu0=1.0, init_seed=0, P_hat=None,
                 muted_update="predicted"):
        super().__init__(G, gamma=gamma, mu0=mu0, P_hat=P_hat,
                         muted_update=muted_update)
        self.model = model
        self.init_seed = init_seed

    def _norm_term_matrix(self):
        G = self._G
        return G.conj().T @ G + self.gamma * np.eye(G.shape[1])

    def _step_size(self, x_power):
        return self._step_scale * self.mu0 / (2.0 * self.norm_term_ * x_power)

    def _init_filter(self, L, R):
        self.point_ = feasible_point(self.model, L, R, self.init_seed)
        self.W_ = self.point_.W

    def _residual(self):
        return self.point_.residual

    def _apply_update(self, x, e_upd, mu, report):
        grad = project_tangent(
            self.point_, 2.0 * euclid_grad_sigma(self.W_, x, e_upd, self._G, self.gamma)
        )
        try:
            self.point_ = retract(self.point_, -mu * grad)
        except RankError:
            report.retraction_failed = True
            self._step_scale = 0.5
            return
        self._step_scale = 1.0
        self.W_ = self.point_.W
        if self.point_.residual > DRIFT_ABORT_TOL:
            raise FeasibilityError(
                f"feasibility drifted to {self.point_.residual:.3e} at "
                f"iteration {self.n_iter_}"
            )
