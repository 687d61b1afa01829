"""Computable lower bounds on maximal Bell violation for bipartite states."""

from .bounds import (
    BoundReport,
    RegionPair,
    SearchConfig,
    chsh_bound,
    detect_nonlocality,
    discrete_bell_value,
    finite_n_value,
    theorem1_max,
    theorem1_value,
    theorem2_max,
    theorem2_value,
)
from .errors import DomainError, ValidationError
from .quadrature import Band, BandGrid, QuadratureConfig, band_measure, bilinear_integral, build_grid, chord_integral
from .states import (
    CorrelationMatrixT,
    DensityMatrix,
    GammaCorrelation,
    GammaOperators,
    bell_diagonal,
    gamma_correlation,
    gamma_operators,
    isotropic,
    load_state,
    pauli_correlation,
    save_state,
    sigma_mixture,
    werner,
)

__version__ = "0.1.0"
