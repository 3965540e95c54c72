"""Random dynamics of complex polynomials: Julia sets of polynomial
semigroups, escape probabilities and their fine structure."""
from .core import (ConvergenceError, DegreeOverflowError, GeneratorSystem, Polynomial, RandomModel,
                   Word, compose, critical_points, derivative, evaluate, preimages, roots, solve_batch)
from .interval import (StaircaseModel, devils_staircase, lebesgue_singular, staircase_mc,
                       staircase_value)
from .iteration import (Disk, EscapeParams, PointCloud, escape_radius, forward_orbit,
                        julia_backward_cloud, kernel_witness, validate_trap)
from .markov import (Interval, MCEstimate, Raster, contraction_rate, m_tau_apply, minimal_sets,
                     t_infinity_exact, t_infinity_mc, t_minimal_mc, t_raster)
from .scene import Scene, SceneError, load_scene
from .thermo import (HoelderReport, TransferOperator, bowen_dimension, box_counting_dim,
                     green_function, hoelder_entropy, hoelder_hausdorff, hoelder_report,
                     nondiff_conditions, omega, omega_integral, pointwise_hoelder_empirical)
from .verify import (check_backward_self_similarity, check_disjoint_preimages, check_fixed_point,
                     check_global_hoelder, check_level_order, check_open_set_condition,
                     check_range_full, run_battery)

__version__ = "0.1.0"
