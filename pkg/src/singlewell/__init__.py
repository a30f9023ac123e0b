"""Single-well Schrodinger operators on the line and integral kernels of
spectral multipliers of the associated degenerate two-dimensional operator
-dx^2 - V(x) dy^2.

Subpackages: potentials (doubling single-well potential families and their
classification), sturm (eigenvalue/eigenfunction solver), spectral_matrices
(coupling matrices and their decay), geometry (control-distance surrogate,
volumes, weights), multipliers (compactly supported spectral multipliers),
grushin (kernel quadrature and Plancherel-type cross checks), cli (suite
runner).
"""

from .errors import (ConfigurationError, DomainError, RangeError,
                     TruncationError)
from .potentials import (ClassificationReport, Potential, classify,
                         log_modulated, power, reciprocal_two_power,
                         two_power)
from .sturm import (EigenSystem, ShootingSolver, bohr_sommerfeld_energy,
                    eigen_system)
from .spectral_matrices import (MatrixA, MatrixP, RhoSet, VirialReport,
                                av_identity_residual, cutoff_mask, decay_fit,
                                identity_report, matrix_A, matrix_P,
                                operator_norm, projector_sum, rho_set,
                                virial_checks)
from .geometry import (GeometryContext, PlanePoint, dist_surrogate,
                       doubling_constants, quasi_triangle_constant, volume,
                       weight, weight_integral_check)
from .multipliers import (DyadicPiece, Multiplier, bump_multiplier,
                          dyadic_cutoff, dyadic_cutoff_tilde, dyadic_piece,
                          heat_multiplier, imaginary_power_multiplier,
                          smoothed_indicator_multiplier, sobolev_inf_norm,
                          standard_multipliers)
from .grushin import (GeneralFamily, HomogeneousFamily, KernelField,
                      KernelMachine, PlancherelReport, heat_gaussian_check,
                      imaginary_power_growth, kernel, l1_norm,
                      plancherel_identity, square_moment_two_routes,
                      weighted_moment)
from .cli import RunConfig, SuiteReport, main, run

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
