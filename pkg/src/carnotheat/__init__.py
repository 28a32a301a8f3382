"""Heat kernels, horizontal perimeters and heat-semigroup nonlocal
perimeters on step-two Carnot groups, with desk-scale verification of
the limit

    (1 - 2s) P_{H,s}(E)  ->  (4 / sqrt(pi)) P_H(E)   as s -> 1/2,

and of the universal hyperplane constant 1/sqrt(4 pi) of the time-1
kernel.
"""

from .budget import QuadratureBudget, stable_seed
from .errors import (AccuracyError, BudgetExhausted, ConfigError,
                     FieldNotAdmissible, InsufficientCurve, JNotInjective,
                     NotBracketGenerating, NotHType, NotSkew, Unbounded,
                     Unsupported)
from .euclid import (ball_sperimeter_exact, davila_constant,
                     davila_limit_check, equivalence_check, euclid_deficit,
                     gagliardo_bruteforce, halfspace_ledoux,
                     taibleson_indicator)
from .functionals import (DeficitCurve, IndicatorFunction, bbm_limit,
                          besov_seminorm, default_time_grid, deficit_curve,
                          head_tail_upper_bound, heat_deficit, ledoux,
                          ledoux_extrapolation, s_perimeter,
                          sandwich_diagnostic)
from .groups import (GroupPoint, GroupSpec, SpectralData, dilate,
                     group_from_json, group_to_json, identity, inverse,
                     is_htype, kernel_weights, make_custom, make_h1_times_r,
                     make_heisenberg, make_quaternionic, multiply, point,
                     resolve_group, spectral)
from .heatkernel import (KernelValue, LambdaQuadrature, apply_to_indicator,
                         kernel, kernel_euclidean, kernel_htype,
                         selftest_chapman_kolmogorov, selftest_normalization,
                         selftest_scaling, vertical_marginal_deviation)
from .phi import (PHI_TARGET, HyperplaneFrame, fourier_profile, phi_direct,
                  phi_via_inversion, schwartz_decay_check)
from .regions import (BoundaryPatch, CoordinateBox, EuclideanBall,
                      HorizontalHalfSpace, VectorField, VerticalCylinder,
                      boundary_patches, contains, cylinder_boundary_field,
                      horizontal_perimeter, perimeter_euclidean,
                      region_from_json, region_to_json, resolve_region,
                      variational_lower_bound, volume)
from .reporting import ConvergenceReport, ExperimentConfig, RunReport, parse_config

__version__ = "0.1.0"
