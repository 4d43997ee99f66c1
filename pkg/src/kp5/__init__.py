"""kp5: pseudospectral solver and estimate laboratory for the fifth-order
KP-II equation with small data."""

__version__ = "0.1.0"

from .fields import (
    Grid,
    DispersionParams,
    SpectralField,
    dispersion_symbol,
    to_physical,
    to_spectral,
    project_constraints,
)
from .propagator import (
    DyadicLadder,
    FieldTrajectory,
    propagate,
    free_trajectory,
    lp_project,
    modulation_project,
)
from .kernel import kernel_gn
from .norms import (
    NormReport,
    SampledPath,
    l2_norm,
    hm12_norm,
    v2_variation,
    ydot_norm,
    zdot_surrogate_norm,
    lqlr_norm,
)
from .solver import (
    SolverConfig,
    CutoffProfile,
    bilinear_nonlinearity,
    duhamel,
    picard_solve,
    final_value_solve,
)
from .scattering import (
    extract_asymptote,
    wave_operator,
    inverse_wave_operator,
    directional_derivative_check,
)

__all__ = [
    "Grid", "DispersionParams", "SpectralField", "dispersion_symbol",
    "to_physical", "to_spectral", "project_constraints",
    "DyadicLadder", "FieldTrajectory", "propagate", "free_trajectory",
    "lp_project", "modulation_project", "kernel_gn",
    "NormReport", "SampledPath", "l2_norm", "hm12_norm", "v2_variation",
    "ydot_norm", "zdot_surrogate_norm", "lqlr_norm",
    "SolverConfig", "CutoffProfile", "bilinear_nonlinearity", "duhamel",
    "picard_solve", "final_value_solve",
    "extract_asymptote", "wave_operator", "inverse_wave_operator",
    "directional_derivative_check",
]
