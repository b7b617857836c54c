"""Shaken optical lattice simulator."""

from ._core import (
    DEFAULT_RECOIL_HZ,
    PROPAGATION_CUTOFF,
    BandIndexError,
    ConfigError,
    EigenSolverError,
    Error,
    LatticeConfig,
    PhaseUndefinedError,
    PropagationError,
    accelerate,
    bessel_j,
    build_subspace,
    ensemble_min_error,
    error_metric,
    fgr_rate,
    ground_state,
    jacobi_anger_normalization,
    matrix_elements,
    moving_lattice,
    optimize,
    population_vector,
    resolve_frequency,
    select_transitions,
    solve_bloch,
    split_single,
    split_state,
    transition_frequency,
)

__version__ = "0.1.0"
