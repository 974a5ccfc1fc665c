"""Spectral simulation and verification laboratory for the weakly damped,
forced fifth-order dispersive equation on the one-dimensional torus.

The package splits into field representation (`fields`), time integration
(`evolution`), the oscillatory-integral operator calculus (`normal_form`),
space-time restricted norms (`bourgain`), exact lattice combinatorics
(`resonance`), scripted long-time studies (`experiments`), artifact
persistence (`reporting`), and the command-line front end (`cli`).
"""

from .fields import (
    HERMITIAN_TOL,
    PhysicalParams,
    SpectralField,
    default_grid_size,
    from_full_spectrum,
    grid_points,
    l2_inner,
    make_field,
    min_grid_size,
    nonlinear_term,
    random_field,
    rescaled,
    sobolev_norm,
    to_physical,
    to_spectral,
    zero_field,
)
from .evolution import (
    PicardDivergenceError,
    PicardResult,
    StepperConfig,
    Trajectory,
    absorbing_time,
    composite_simpson,
    cumulative_cubic_integral,
    default_dt,
    energy_law_residual,
    evolve,
    linear_propagate,
    phase,
    picard_solve,
    step,
)
from .normal_form import (
    B_op,
    DuhamelResidualReport,
    InteractionField,
    MultilinearReport,
    NonresonanceResult,
    R_op,
    ResonanceError,
    check_nonresonance,
    duhamel_residual,
    from_interaction,
    multilinear_constants,
    rho_op,
    sigma_op,
    to_interaction,
)
from .bourgain import (
    DEFAULT_TAPER_FRACTION,
    ScanResult,
    SpaceTimeSample,
    bilinear_ratio,
    characteristic_sample,
    dx_sample,
    l4_ratio,
    l6_ratio,
    product_sample,
    random_sample,
    scan_bilinear,
    scan_l4,
    scan_l6,
    windowed_transform,
    xsb_norm,
    ys_norm,
    zs_norm,
)
from .resonance import (
    GammaGapReport,
    ResonanceTable,
    SweepRow,
    TripleClass,
    classify_resonant_triple,
    dyadic_sweep,
    enumerate_Apq,
    four_phase_factorization_check,
    gamma_gap_stats,
    kappa,
    quintic_identity_check,
    theta,
)
from .experiments import (
    AssertionRecord,
    ExperimentReport,
    decay_envelope,
    parallel_map,
    run_absorbing_ball,
    run_attractor_ensemble,
    run_smoothing,
    worker_count,
)

__version__ = "0.1.0"

__all__ = [
    "HERMITIAN_TOL",
    "PhysicalParams",
    "SpectralField",
    "default_grid_size",
    "from_full_spectrum",
    "grid_points",
    "l2_inner",
    "make_field",
    "min_grid_size",
    "nonlinear_term",
    "random_field",
    "rescaled",
    "sobolev_norm",
    "to_physical",
    "to_spectral",
    "zero_field",
    "PicardDivergenceError",
    "PicardResult",
    "StepperConfig",
    "Trajectory",
    "absorbing_time",
    "composite_simpson",
    "cumulative_cubic_integral",
    "default_dt",
    "energy_law_residual",
    "evolve",
    "linear_propagate",
    "phase",
    "picard_solve",
    "step",
    "B_op",
    "DuhamelResidualReport",
    "InteractionField",
    "MultilinearReport",
    "NonresonanceResult",
    "R_op",
    "ResonanceError",
    "check_nonresonance",
    "duhamel_residual",
    "from_interaction",
    "multilinear_constants",
    "rho_op",
    "sigma_op",
    "to_interaction",
    "DEFAULT_TAPER_FRACTION",
    "ScanResult",
    "SpaceTimeSample",
    "bilinear_ratio",
    "characteristic_sample",
    "dx_sample",
    "l4_ratio",
    "l6_ratio",
    "product_sample",
    "random_sample",
    "scan_bilinear",
    "scan_l4",
    "scan_l6",
    "windowed_transform",
    "xsb_norm",
    "ys_norm",
    "zs_norm",
    "GammaGapReport",
    "ResonanceTable",
    "SweepRow",
    "TripleClass",
    "classify_resonant_triple",
    "dyadic_sweep",
    "enumerate_Apq",
    "four_phase_factorization_check",
    "gamma_gap_stats",
    "kappa",
    "quintic_identity_check",
    "theta",
    "AssertionRecord",
    "ExperimentReport",
    "decay_envelope",
    "parallel_map",
    "run_absorbing_ball",
    "run_attractor_ensemble",
    "run_smoothing",
    "worker_count",
    "__version__",
]
