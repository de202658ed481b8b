"""Two-time nonequilibrium Green's functions on the Kadanoff-Baym contour.

High-order (k = 1..5) solvers for contour Dyson equations, integral
equations and convolutions on the discretized L-shaped contour, plus free
Green's functions, weak-coupling self-energies, and a portable container
format for results.
"""

FERMION = -1
BOSON = +1

from .weights import (  # noqa: E402
    WeightTableSet,
    build_weights,
    gregory_integrate,
    boundary_convolute,
    differentiate,
    integrate_poly,
    interpolate,
)
from .contour import (  # noqa: E402
    HermMatrix,
    TimeSlice,
    ContourScalarFn,
    distance_norm2,
    extrapolate_timestep,
    init_from_matsubara,
)
from .freegf import Cf4Coefficients, cf4_step, green_from_H  # noqa: E402
from .convolution import (  # noqa: E402
    conv_matsubara,
    conv_timestep,
    conv_full,
    response_convolution,
    correlation_energy,
)
from .dyson import DysonInputs, dyson_mat, dyson_start, dyson_timestep, dyson_timestep_parallel  # noqa: E402
from .vie2 import vie2_mat, vie2_start, vie2_timestep  # noqa: E402
from .diagrams import bubble1, bubble2, sigma_2b, sigma_gw, sigma_tmatrix, ham_mf, chi_from_P  # noqa: E402
from .containerio import write_container, read_container, export_csv  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "FERMION",
    "BOSON",
    "WeightTableSet",
    "build_weights",
    "gregory_integrate",
    "boundary_convolute",
    "differentiate",
    "integrate_poly",
    "interpolate",
    "HermMatrix",
    "TimeSlice",
    "ContourScalarFn",
    "distance_norm2",
    "extrapolate_timestep",
    "init_from_matsubara",
    "Cf4Coefficients",
    "cf4_step",
    "green_from_H",
    "conv_matsubara",
    "conv_timestep",
    "conv_full",
    "response_convolution",
    "correlation_energy",
    "DysonInputs",
    "dyson_mat",
    "dyson_start",
    "dyson_timestep",
    "dyson_timestep_parallel",
    "vie2_mat",
    "vie2_start",
    "vie2_timestep",
    "bubble1",
    "bubble2",
    "sigma_2b",
    "sigma_gw",
    "sigma_tmatrix",
    "chi_from_P",
    "ham_mf",
    "write_container",
    "read_container",
    "export_csv",
]
