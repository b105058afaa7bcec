"""Two contact-interacting bosons on a ring with a transfer-matrix defect.

The package computes the Bethe-ansatz spectrum, the corresponding
wavefunctions and the geometric phase acquired when the defect phase is
cycled through ``2 pi``.
"""
from .errors import (
    ConfigurationError,
    ConvergenceError,
    DegenerateMomentaError,
    DomainError,
    EnumerationError,
    IllDefinedPhaseError,
    InvalidParameterError,
    NotASpectralRootError,
    OracleUnreliableError,
    OutOfRangeError,
    PathError,
    PathTooCoarseError,
    RingBetheError,
    SingularStepError,
)
from .geomphase import (
    ContourSpec,
    PhaseResult,
    geometric_phase,
    global_phase_limit,
    phase_converged,
    state_path,
    sweep,
)
from .spectrum import (
    RootPath,
    SpectralPoint,
    SystemConfig,
    continue_state,
    curve_samples,
    energy,
    enumerate_states,
    find_root,
    free_roots,
    spectral_jacobian,
    spectral_residual,
    track_alpha,
)
from .tmatrix import DefectParams, TransferMatrix, compose, make_defect, transmission
from .wavefun import (
    AmplitudeSet,
    Wavefunction,
    boundary_system,
    build_state,
    evaluate,
    inner_product,
    inner_product_quadrature,
    scattering_factor,
    triangle_integral,
)

__version__ = "0.1.0"
