"""Exact dyadic Green's function and emitter QED for parallel nanofiber arrays."""

__version__ = "0.1.0"

from .config import (
    DEFAULT_INDEX_CORE,
    DEFAULT_WAVELENGTH_NM,
    EmitterSpec,
    Fiber,
    FiberArray,
    ProblemConfig,
    SolverSettings,
    SweepConfig,
    canonical_two_fiber,
    load_config,
    save_config,
    serialize_config,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DomainError,
    FiberQEDError,
    PoleError,
    RangeError,
)
from .multiscatter import (
    MultiScatterer,
    ScatteredAmplitudes,
    SourceTerms,
    SpectralGreen,
    assemble_and_solve,
    source_terms,
    spectral_tensor,
)
from .observables import (
    CouplingMatrix,
    EmitterRates,
    compare_exact_asymptotic,
    coupling_matrix,
    emitter_rates,
)
from .qdynamics import (
    MasterEqSpec,
    concurrence,
    evolve,
    steady_state,
    symmetric_pair_spec,
    transient_sweep,
)
from .spectral import (
    GreenTensor,
    GuidedMode,
    Solver,
    asymptotic_tensor,
    find_guided_modes,
    get_solver,
    guided_part,
    invert_total,
)
from .specfun import CylFunValue, bessel_j, derivative_pair, hankel1
from .vacuum import vacuum_im_coincident, vacuum_tensor

__all__ = [
    "DEFAULT_INDEX_CORE", "DEFAULT_WAVELENGTH_NM",
    "EmitterSpec", "Fiber", "FiberArray", "ProblemConfig", "SolverSettings", "SweepConfig",
    "canonical_two_fiber", "load_config", "save_config", "serialize_config",
    "ConfigError", "ConvergenceError", "DomainError", "FiberQEDError", "PoleError", "RangeError",
    "MultiScatterer", "ScatteredAmplitudes", "SourceTerms", "SpectralGreen",
    "assemble_and_solve", "source_terms", "spectral_tensor",
    "CouplingMatrix", "EmitterRates", "compare_exact_asymptotic", "coupling_matrix",
    "emitter_rates",
    "MasterEqSpec", "concurrence", "evolve", "steady_state", "symmetric_pair_spec",
    "transient_sweep",
    "GreenTensor", "GuidedMode", "Solver", "asymptotic_tensor", "find_guided_modes",
    "get_solver", "guided_part", "invert_total",
    "CylFunValue", "bessel_j", "derivative_pair", "hankel1",
    "vacuum_im_coincident", "vacuum_tensor",
]
