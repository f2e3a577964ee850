"""conebound: spectral toolkit for conical surfaces.

Computes the geometric slope constant k_S of a conical surface from its
cross-section curve, the transverse threshold eps0 of the associated 1D
line operator, and eigenvalue-counting curves of the reduced half-line
operators, so that the near-threshold law N(eps0 - E) ~ k_S |ln E| can be
checked numerically end to end.
"""

__version__ = "0.1.0"

from .errors import (ConeboundError, ConfigError, ConvergenceError,
                     PreconditionError)
from .geometry import (CurveSpec, SampledCurve, build_curve,
                       geodesic_curvature, read_curve_samples, sup_curvature,
                       write_curve_csv)
from .spectral1d import (EigResult, Grid1D, Operator1D, assemble, count_below,
                         lowest_eigenvalues, oscillation_count)
from .curvature_operator import KsReport, ks_constant, ks_spectrum
from .threshold import (AgmonReport, PotentialSpec, ThresholdReport,
                        TruncationSweep, agmon_norms, agmon_weight,
                        compute_threshold, potential_spec_from_dict,
                        truncation_sweep)
from .counting import (AssembledModel, CountingCurve, RadialProblem, SlopeFit,
                       assemble_model, count_radial, counting_curve,
                       fit_log_slope, kirsch_simon_slope, model_slope_bounds)

__all__ = [
    "__version__",
    "ConeboundError", "ConfigError", "ConvergenceError", "PreconditionError",
    "CurveSpec", "SampledCurve", "build_curve", "geodesic_curvature",
    "read_curve_samples", "sup_curvature", "write_curve_csv",
    "EigResult", "Grid1D", "Operator1D", "assemble", "count_below",
    "lowest_eigenvalues", "oscillation_count",
    "KsReport", "ks_constant", "ks_spectrum",
    "AgmonReport", "PotentialSpec", "ThresholdReport", "TruncationSweep",
    "agmon_norms", "agmon_weight", "compute_threshold",
    "potential_spec_from_dict", "truncation_sweep",
    "AssembledModel", "CountingCurve", "RadialProblem", "SlopeFit",
    "assemble_model", "count_radial", "counting_curve", "fit_log_slope",
    "kirsch_simon_slope", "model_slope_bounds",
]
