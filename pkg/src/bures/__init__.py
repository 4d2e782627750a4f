"""Bures geometry, fidelity and channel analysis on finite-dimensional tracial C*-algebras."""
from .algebra import (DEFAULT_TOL, AlgebraSpec, AlgElement, DensityElement, Tolerances,
                      abs_element, is_orthogonal_pair, matrix_algebra, psd_sqrt, random_density,
                      rng_stream, tau_inner_product, trace, trace_norm)
from .channels import (Channel, PropertyVerdict, Provenance, Status, apply, choi_matrix,
                       choi_schwarz_m2, completely_depolarising, compose, convex_combine,
                       depolarising, from_kraus, identity_channel, is_cp, is_positive,
                       is_trace_preserving, is_unital, k_positive_probe, pauli_pair, schwarz_probe,
                       standard_channel, tau_adjoint, transpose_map, unitary_channel,
                       unitary_mixture)
from .contraction import (ContractionReport, bures_contraction_probe, correctability_obstruction,
                          equidistance_criterion, extreme_point_probe, inverse_positivity_check,
                          nonexpansive_probe)
from .errors import (BuresError, InvalidParameterError, NotHermitianError, NotPositiveError,
                     NumericalError, RefusedError, StructuralError, TheoremViolation)
from .metrics import (MetricReport, bures_distance, fidelity, fidelity_and_distance, fvdg_bounds,
                      joint_concavity_check, metric_report, optimal_alignment_unitary,
                      trace_distance, variational_fidelity_check)
from .structure import (SpectrumReport, SubspaceBasis, conditional_expectation_onto_fix,
                        fit_unitarily_covariant, fixed_point_space, irreducibility_verdict,
                        multiplicative_domain, superoperator_spectrum)

__version__ = "0.1.0"
