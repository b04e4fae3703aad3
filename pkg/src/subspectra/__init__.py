"""Spectra, Turing thresholds and decay laws for linear
reaction-subdiffusion systems."""

from .complexcore import (
    BranchCut,
    BranchViolation,
    ConvergenceFailure,
    green_subdiffusion,
    in_branch,
    membership,
    mittag_leffler,
    principal_power,
)
from .dispersion import (
    ClassifiedRoot,
    PointClass,
    eval_ca2,
    eval_regular,
    eval_ss,
    roots_ca,
    roots_ss,
    scalar_ca_root,
)
from .models import (
    AnomalousExponent,
    CreationAnnihilationParams,
    DegenerateInput,
    ReactionMatrix,
    ScalarCreationAnnihilationParams,
    SourceSinkParams,
)
from .spectra import (
    RegionLabel,
    SpectrumPoint,
    SpectrumScan,
    asymptotic_ss,
    convergence_distance,
    region_classify,
    scaled_unstable_curve,
    scan_ca,
    scan_ca_scalar,
    scan_regular,
    scan_ss,
)
from .timedomain import (
    DecayEstimate,
    DecayKind,
    FourierInitialData,
    classify_decay_ca,
    classify_decay_ca_scalar,
    classify_decay_ss,
    fit_decay_exponent,
    gl_evolve,
    pf_coefficients_ca,
    pf_coefficients_ca_scalar,
    pf_coefficients_ss,
)
from .turing import (
    CreationAnnihilationThresholds,
    NotTuringCapable,
    SourceSinkThresholds,
    taylor_dispersion_ca,
    taylor_roots_ca,
    thresholds_ca,
    thresholds_ss,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
