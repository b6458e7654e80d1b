"""Position measurement of a free relativistic scalar by restricted path integrals.

A one-particle Klein-Gordon field in 1+1 dimensions on a periodic lattice,
its positive-frequency propagator by two independent routes, sharp and
smeared measurement reductions, and the generalized-unitarity analysis of the
smeared measurement.
"""
__version__ = "0.1.0"

from ._accel import BACKEND
from .core import (Event, GridSpec, SliceState, kg_inner_product, kg_norm, make_gaussian_packet,
                   mode_state, position_field, propagate, translate)
from .errors import (BandLimitError, ConfigError, FitError, GridMismatchError, NumericalGuardError,
                     OutcomeOrderError, QuadratureError, RelMeasError, ResourceGuardError)
from .measurement import (SmearingKernel, compton_condition_report, gaussian_kernel, make_kernel,
                          q_spectrum, rectangular_kernel, sharp_reduce, sharp_weights,
                          smeared_reduce)
from .propagator import (PropagatorKernel, ProperTimeQuadrature, equal_time_oracle,
                         oracle_kernel_value, proper_time_kernel, spectral_kernel)
from .unitarity import DefectReport, gram_defect, outcome_distribution

__all__ = [
    "BACKEND", "Event", "GridSpec", "SliceState", "kg_inner_product", "kg_norm",
    "make_gaussian_packet", "mode_state", "position_field", "propagate", "translate",
    "BandLimitError", "ConfigError", "FitError", "GridMismatchError", "NumericalGuardError",
    "OutcomeOrderError", "QuadratureError", "RelMeasError", "ResourceGuardError",
    "SmearingKernel", "compton_condition_report", "gaussian_kernel", "make_kernel",
    "q_spectrum", "rectangular_kernel", "sharp_reduce", "sharp_weights", "smeared_reduce",
    "PropagatorKernel", "ProperTimeQuadrature", "equal_time_oracle", "oracle_kernel_value",
    "proper_time_kernel", "spectral_kernel", "DefectReport", "gram_defect",
    "outcome_distribution",
]
