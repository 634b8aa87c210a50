"""Convolutional delay-embedding coordinates and finite-dimensional
Koopman operator models for dynamical-system trajectories."""

from .autocov import Autocovariance, autocov_exact, autocov_taylor, basis_from_autocov
from .bases import (
    BasisSpec,
    fourier_basis,
    fourier_generator,
    gram_check,
    legendre_basis,
    legendre_generator,
    window_grid,
)
from .embedding import (
    CoordinateSeries,
    HankelMatrix,
    SvdBasis,
    basis_from_svd,
    build_hankel,
    conv_coordinates,
    normalized_coordinates,
    project_windows,
    reconstruct_window,
    svd_basis_from_trajectory,
    svd_coordinates,
)
from .exceptions import ConfigError, ContractError, NumericFailure
from .koopman import (
    EigenfunctionSeries,
    KoopmanModel,
    antisymmetry_defect,
    antisymmetry_defect_from_model,
    coefficient_growth,
    discrete_map_from_basis,
    dmd,
    edmd,
    eigenfilters,
    forecast,
    generator_from_basis,
    havok_model,
    interlacing_check,
    koopman_eigenfunctions,
    model_from_coordinates,
    snapshot_forecast,
    truncation_error_rms,
    window_side_operator,
)
from .numerics import (
    EigDecomposition,
    SvdFactors,
    eig,
    finite_diff,
    pseudoinverse,
    quad_inner,
    truncated_svd,
)
from .systems import (
    LinearRandomImag,
    Lorenz,
    Nls,
    Trajectory,
    VanDerPol,
    default_initial_state,
    integrate_rk4,
    make_linear_random,
    simulate_nls,
    vdp_asymptotic,
)

__version__ = "0.1.0"
