"""Atomic frequency comb analytics, waveform synthesis, optical pumping and fitting."""

from ._core import (
    ConfigError,
    FitError,
    ResourceError,
    ValidationError,
    afc_efficiency,
    afc_efficiency_with_background,
    bandwidth_limit_scan,
    crest_factor,
    efficiency_decay,
    fit_afc_decay,
    fit_comb_parameters,
    fit_double_exponential,
    hole_decay,
    lifetime_trace,
    optimal_finesse,
    synthesize,
)

__all__ = [
    "ConfigError",
    "FitError",
    "ResourceError",
    "ValidationError",
    "afc_efficiency",
    "afc_efficiency_with_background",
    "bandwidth_limit_scan",
    "crest_factor",
    "efficiency_decay",
    "fit_afc_decay",
    "fit_comb_parameters",
    "fit_double_exponential",
    "hole_decay",
    "lifetime_trace",
    "optimal_finesse",
    "synthesize",
]
