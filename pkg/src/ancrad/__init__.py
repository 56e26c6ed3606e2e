"""ancrad: frequency-domain multichannel active-noise-control simulation.

Three adaptive control-filter algorithms (plain NLMS, radiation-penalty
NLMS, and a Riemannian NLMS that constrains the exterior radiated power
on a generalized Stiefel manifold), the free-field acoustic model behind
them, and an experiment harness with calibration, sweeps, and CSV trace
output.
"""

__version__ = "0.1.0"

from .acoustics import (ArrayGeometry, FrequencyPoint, Medium, RadiationModel,
                        build_radiation_matrix, build_transfer_matrix,
                        exterior_radiation_power, greens_function,
                        make_radiation_model)
from .algorithms import (NlmsControlFilter, PenaltyNlmsControlFilter,
                         RiemannianNlmsControlFilter, euclid_grad_sigma,
                         safeguard_mute, sigma_cost)
from .errors import AncradError
from .manifold import StiefelPoint, feasible_point, project_tangent, retract

__all__ = [
    "__version__",
    "AncradError",
    "Medium",
    "ArrayGeometry",
    "FrequencyPoint",
    "RadiationModel",
    "greens_function",
    "build_transfer_matrix",
    "build_radiation_matrix",
    "make_radiation_model",
    "exterior_radiation_power",
    "StiefelPoint",
    "project_tangent",
    "retract",
    "feasible_point",
    "sigma_cost",
    "euclid_grad_sigma",
    "safeguard_mute",
    "NlmsControlFilter",
    "PenaltyNlmsControlFilter",
    "RiemannianNlmsControlFilter",
]
