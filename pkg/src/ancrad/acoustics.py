"""Free-field acoustic model.

Green's functions in 2-D and 3-D, transfer matrices between source and
receiver arrays, and the Hermitian radiation matrix whose quadratic form
gives the acoustic power radiated outward by the secondary loudspeakers.

Conventions: time factor e^{-j omega t}; the 2-D outgoing-wave kernel is
(j/4) H0^(1)(k d) and the 3-D kernel is e^{j k d}/(4 pi d). Absolute
radiation levels depend on this normalization choice; ratio and
constancy properties do not.
"""

from dataclasses import dataclass, field

import numpy as np

from . import cxla
from .errors import DomainError, NumericError, ShapeError, SingularityError
from .specfun import bessel_j0, bessel_y0, sph_bessel_j0
from .validation import as_complex_vector, as_real_scalar

__all__ = [
    "Medium",
    "ArrayGeometry",
    "FrequencyPoint",
    "RadiationModel",
    "greens_function",
    "build_transfer_matrix",
    "build_radiation_matrix",
    "make_radiation_model",
    "exterior_radiation_power",
]

# Receiver closer than this to a source is treated as coincident.
COINCIDENCE_EPS = 1e-9


@dataclass(frozen=True)
class Medium:
    """Homogeneous propagation medium: sound speed c (m/s), density rho (kg/m^3)."""

    c: float = 343.0
    rho: float = 1.3

    def __post_init__(self):
        as_real_scalar(self.c, "c", minimum=0.0, inclusive_min=False)
        as_real_scalar(self.rho, "rho", minimum=0.0, inclusive_min=False)


def _as_positions(p, dimension, name):
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != dimension:
        raise ShapeError(
            f"{name}: expected shape (n, {dimension}), got {arr.shape}"
        )
    if arr.shape[0] < 1:
        raise ShapeError(f"{name}: need at least one position")
    if arr.shape[0] > 1:
        diff = arr[:, np.newaxis, :] - arr[np.newaxis, :, :]
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        np.fill_diagonal(dist, np.inf)
        if dist.min() <= COINCIDENCE_EPS:
            raise DomainError(f"{name}: contains duplicate positions")
    return arr


@dataclass(frozen=True)
class ArrayGeometry:
    """Positions of every transducer in the scene.

    primary_positions drive the unwanted noise field, secondary_positions
    are the control loudspeakers (length L), error_positions are the
    monitoring microphones (length M). reference_count is the number of
    reference channels R; by default one per primary source, matching a
    setup where each reference microphone observes one source directly.
    """

    dimension: int
    primary_positions: np.ndarray
    secondary_positions: np.ndarray
    error_positions: np.ndarray
    reference_count: int = 0

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise DomainError(f"dimension must be 2 or 3, got {self.dimension}")
        for name in ("primary_positions", "secondary_positions", "error_positions"):
            arr = _as_positions(getattr(self, name), self.dimension, name)
            object.__setattr__(self, name, arr)
        if self.reference_count == 0:
            object.__setattr__(self, "reference_count", len(self.primary_positions))
        if self.reference_count < 1:
            raise DomainError("reference_count must be >= 1")

    @property
    def n_secondary(self):
        return len(self.secondary_positions)

    @property
    def n_error(self):
        return len(self.error_positions)


@dataclass(frozen=True)
class FrequencyPoint:
    """A single analysis frequency and its wavenumber k = 2 pi f / c."""

    frequency: float
    wavenumber: float

    @classmethod
    def for_medium(cls, frequency, medium: Medium):
        f = as_real_scalar(frequency, "frequency", minimum=0.0, inclusive_min=False)
        return cls(frequency=f, wavenumber=2.0 * np.pi * f / medium.c)


def greens_function(src, rcv, fp: FrequencyPoint, medium=None, dimension=2):
    """Free-field Green's function between two points.

    2-D: (j/4) (J0(kd) + j Y0(kd)); 3-D: e^{jkd} / (4 pi d), with
    d = ||src - rcv||. `medium` is accepted for interface uniformity but
    unused: the wavenumber in `fp` already encodes it.

    Raises
    ------
    SingularityError
        If the points are within COINCIDENCE_EPS of each other.
    """
    src = np.asarray(src, dtype=np.float64)
    rcv = np.asarray(rcv, dtype=np.float64)
    d = float(np.linalg.norm(src - rcv))
    if d <= COINCIDENCE_EPS:
        raise SingularityError(f"coincident source and receiver (d = {d:.3e} m)")
    kd = fp.wavenumber * d
    if dimension == 2:
        return 0.25j * complex(bessel_j0(kd), bessel_y0(kd))
    if dimension == 3:
        return complex(np.cos(kd), np.sin(kd)) / (4.0 * np.pi * d)
    raise DomainError(f"dimension must be 2 or 3, got {dimension}")


def build_transfer_matrix(sources, receivers, fp: FrequencyPoint, medium=None,
                          dimension=2):
    """Transfer matrix with entry (m, l) = greens_function(source_l, receiver_m).

    Shape is (#receivers, #sources). Used both for the secondary paths G
    and the primary paths P.
    """
    sources = np.atleast_2d(np.asarray(sources, dtype=np.float64))
    receivers = np.atleast_2d(np.asarray(receivers, dtype=np.float64))
    out = np.empty((len(receivers), len(sources)), dtype=np.complex128)
    for m, r in enumerate(receivers):
        for l, s in enumerate(sources):
            try:
                out[m, l] = greens_function(s, r, fp, medium, dimension)
            except SingularityError as exc:
                raise SingularityError(
                    f"source {l} coincides with receiver {m}: {exc}"
                ) from exc
    return out


@dataclass(frozen=True)
class RadiationModel:
    """Radiation quadratic form and its scaled factorizations.

    A is the raw kernel matrix as built (real symmetric); delta is the
    diagonal shift actually applied to make it positive definite (zero
    for well-separated layouts). The effective matrix A + delta I defines
    the radiated power and, divided by the target constant C, the scaled
    matrix A_tilde whose square-root factors the manifold code needs.
    """

    A: np.ndarray
    C: float
    delta: float
    A_tilde: np.ndarray = field(repr=False)
    sqrt_A_tilde: np.ndarray = field(repr=False)
    inv_sqrt_A_tilde: np.ndarray = field(repr=False)

    @property
    def effective(self):
        """The positive definite matrix A + delta I used in the power form."""
        if self.delta == 0.0:
            return self.A
        return self.A + self.delta * np.eye(self.A.shape[0])

    def with_target_power(self, C):
        """Return a copy rescaled to a new target constant C."""
        return make_radiation_model(self.A, C=C, delta=self.delta)

    @property
    def size(self):
        return self.A.shape[0]


def make_radiation_model(A, C=1.0, delta=None, eig_floor_factor=1e-10):
    """Assemble a RadiationModel from a kernel matrix.

    If `delta` is None, the positive-definiteness policy runs: with
    eig_floor = eig_floor_factor * max eigenvalue, any spectrum reaching
    down to eig_floor or below gets a diagonal shift
    delta = 2 * eig_floor - min_eigenvalue. Pass delta explicitly to
    reuse a previously determined shift (e.g. when rescaling C).
    """
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"radiation matrix must be square, got {A.shape}")
    if not np.array_equal(A, A.T):
        raise DomainError("radiation matrix must be exactly symmetric")
    C = as_real_scalar(C, "C", minimum=0.0, inclusive_min=False)
    if delta is None:
        w = cxla.herm_eig(A, "A").eigenvalues
        eig_floor = eig_floor_factor * float(w[-1])
        delta = 2.0 * eig_floor - float(w[0]) if w[0] <= eig_floor else 0.0
    eff = A + delta * np.eye(A.shape[0]) if delta != 0.0 else A
    A_tilde = eff / C
    sqrt_At, inv_sqrt_At = cxla.herm_sqrt(A_tilde, "A_tilde")
    return RadiationModel(
        A=A, C=C, delta=float(delta), A_tilde=A_tilde,
        sqrt_A_tilde=sqrt_At, inv_sqrt_A_tilde=inv_sqrt_At,
    )


def build_radiation_matrix(secondary_positions, fp: FrequencyPoint, medium: Medium,
                           dimension=2, eig_floor_factor=1e-10):
    """Radiation matrix for point secondary sources.

    Entry (l, l') is the kernel 1/(8 c rho k) times J0(k r) in 2-D or
    j0(k r) in 3-D, with r the distance between loudspeakers l and l'.
    Diagonal entries equal 1/(8 c rho k) exactly. Entries are computed
    once per unordered pair, so the matrix is exactly symmetric.

    Returns a RadiationModel with C = 1; calibration fills in the real
    target constant later via with_target_power.
    """
    pos = np.atleast_2d(np.asarray(secondary_positions, dtype=np.float64))
    L = len(pos)
    if L < 1:
        raise ShapeError("need at least one secondary position")
    k = fp.wavenumber
    if k <= 0.0:
        raise DomainError(f"wavenumber must be positive, got {k}")
    kernel = bessel_j0 if dimension == 2 else sph_bessel_j0
    coef = 1.0 / (8.0 * medium.c * medium.rho * k)
    A = np.empty((L, L), dtype=np.float64)
    for i in range(L):
        A[i, i] = coef * bessel_j0(0.0)
        for j in range(i + 1, L):
            v = coef * kernel(k * float(np.linalg.norm(pos[i] - pos[j])))
            A[i, j] = v
            A[j, i] = v
    return make_radiation_model(A, C=1.0, eig_floor_factor=eig_floor_factor)


def exterior_radiation_power(y, model: RadiationModel):
    """Radiated power Re(y^H A y) for driving signals y.

    The imaginary part must be negligible (<= 1e-12 relative) by Hermitian
    symmetry; it is asserted and discarded.
    """
    y = as_complex_vector(y, "y", length=model.size)
    v = complex(y.conj() @ (model.effective @ y))
    if abs(v.imag) > 1e-12 * abs(v):
        raise NumericError(
            f"radiated power has non-negligible imaginary part ({v.imag:.3e})"
        )
    return v.real
