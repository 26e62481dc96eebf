"""Fourier-decaying measures on sets of exact Diophantine approximation order.

The package builds, at finite scale, the measures whose supports consist of
points approximable to a prescribed order and no better, and verifies every
quantitative step numerically: per-scale coefficient regimes, the iterated
convolution with certified truncation, the envelope-stability bookkeeping,
gap points witnessing the two-sided approximation constraints, the lift to
the torus and the window back to the line, decay-rate fits, and the
normality summation test.
"""

from .analysis import (DecayFit, NormalitySum, dimension_report, fit_decay,
                       normality_sum, pair_evaluator)
from .bump import (BumpSpec, bump_grid, bump_transform, certify_decay, decay_bound,
                   decay_bound_tail_integral, widths_schedule)
from .diophantine import (GapPoint, GapReport, ThetaSpec, annulus_hits, construct_gap_point,
                          convergents, estimate_exponent, gap_report, partial_quotients,
                          violation_search)
from .errors import (AdmissibilityError, BudgetError, CertificationError, ConfigError,
                     ExactOrderError, PrecisionError, ResolutionError, StrictModeError)
from .layer import ScaleLayer, f_hat, g_hat, layer_grid, verify_regimes
from .params import ApproxFunction, ExponentSet, derive_exponents, tau_threshold
from .periodize import (box_profile, lift_check, lift_scan, verify_real_decay,
                        window_split, window_transform, windowed_mass)
from .spectral import (ScaleSchedule, SpectralVector, StabilityParams, StabilityReport,
                       check_stability, convolve, layer_provider, layer_vector,
                       point_mass, product_measure, stability_trend,
                       verify_stability_hypotheses)

__version__ = "0.1.0"

__all__ = [
    "ApproxFunction", "ExponentSet", "derive_exponents", "tau_threshold",
    "ThetaSpec", "partial_quotients", "convergents", "estimate_exponent",
    "annulus_hits", "violation_search", "GapPoint", "GapReport",
    "construct_gap_point", "gap_report",
    "BumpSpec", "widths_schedule", "bump_grid", "bump_transform",
    "certify_decay", "decay_bound", "decay_bound_tail_integral",
    "ScaleLayer", "g_hat", "f_hat", "layer_grid", "verify_regimes",
    "SpectralVector", "ScaleSchedule", "point_mass", "layer_provider",
    "layer_vector", "convolve", "product_measure",
    "StabilityParams", "StabilityReport", "check_stability",
    "verify_stability_hypotheses", "stability_trend",
    "box_profile", "lift_check", "lift_scan", "window_transform",
    "window_split", "windowed_mass", "verify_real_decay",
    "DecayFit", "fit_decay", "pair_evaluator", "NormalitySum",
    "normality_sum", "dimension_report",
    "ExactOrderError", "ConfigError", "AdmissibilityError", "BudgetError",
    "StrictModeError", "PrecisionError", "CertificationError", "ResolutionError",
    "__version__",
]
