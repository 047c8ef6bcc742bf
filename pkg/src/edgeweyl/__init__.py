"""Edge-encoded spectral counting: Weyl-law recovery from C = pi - eps*lambda encodings."""

__version__ = "0.1.0"

from .counting import (CountingCurve, MollifierSpec, check_composition, count_edge, count_lambda,
                       count_y, edge_hit_probability, epsilon_collapse_discrepancy,
                       smoothed_curve, window_stats)
from .encoding import (FAMILIES, Affine, EncodedMeasure, Perturbed, PolyType, default_families,
                       encode, invert_rule, theoretical_envelope)
from .errors import EdgeWeylError, NumericalError, ValidationError
from .estimation import (density_exponent, estimate_k, estimate_weyl, loglog_slope,
                         remainder_probe, stability_report, two_term_fit)
from .krein import AtomicMeasurePlus, realize, realize_encoded
from .spectra import (SpectralMeasure, ball3_spectrum, berger_spectrum, lens_spectrum,
                      sphere_spectrum, synthetic_spectrum, torus_spectrum, weyl_constant)
from .transforms import edge_heat, heat_trace, seeley_fit, seeley_fit_edge, zeta

__all__ = [
    "Affine", "AtomicMeasurePlus", "CountingCurve", "EdgeWeylError", "EncodedMeasure", "FAMILIES",
    "MollifierSpec", "NumericalError", "Perturbed", "PolyType", "SpectralMeasure",
    "ValidationError", "ball3_spectrum", "berger_spectrum", "check_composition", "count_edge",
    "count_lambda", "count_y", "default_families", "density_exponent", "edge_heat",
    "edge_hit_probability", "encode", "epsilon_collapse_discrepancy", "estimate_k",
    "estimate_weyl", "heat_trace", "invert_rule", "lens_spectrum", "loglog_slope", "realize",
    "realize_encoded", "remainder_probe", "seeley_fit", "seeley_fit_edge", "smoothed_curve",
    "sphere_spectrum", "stability_report", "synthetic_spectrum", "theoretical_envelope",
    "torus_spectrum", "two_term_fit", "weyl_constant", "window_stats", "zeta",
]
