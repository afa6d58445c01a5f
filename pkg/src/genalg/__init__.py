"""Numerics for rings of epsilon-indexed nets and the degenerate Dirichlet
problem -lap(Phi(u)) + u = f solved through vanishing artificial viscosity."""

from .errors import (ConfigError, ExpressionError, GenAlgError,
                     GridMismatchError, LinearSolveError,
                     MaxPrincipleViolation, NotInVAPlus, NotWeaklySolvable,
                     PicardStalled, PreconditionError)
from .scale_ring import (EpsilonGrid, PolynomialBound, RealNet, ScaleClass,
                         ViscosityScale, check_extension_certificate,
                         check_solidity, classify_net, envelope_holds, gen_eq,
                         net_abs, net_add, net_mul, net_scale, read_net_csv,
                         tends_to_zero, validate_viscosity, write_net_csv)
from .grid_domain import (AssociationReport, BoundaryData, Domain,
                          GeneralizedGridFunction, GridFunction, PointMass,
                          TestFunctionH20, assoc_weak, build_test_functions,
                          embed_constant, extend_functional, gen_leq,
                          gen_positive_part, integrate, norm, point_value,
                          positive_part, read_grid_csv, write_grid_csv,
                          zero_generalized)
from .nonlinearity import (PhiSpec, TruncatedPhi, arctan_phi, identity_phi,
                           make_phi_eps, phi_by_name, saturated_cubic,
                           truncate, validate_phi)
from .dirichlet_solver import (LinearEllipticProblem, SolveOptions,
                               SolveReport, calibrate_estimate_constant,
                               check_h1_estimate, check_nonpositive,
                               conjugate_gradient, generalized_solve,
                               harmonic_lift, linear_solve, picard_map,
                               solve_regularized, weak_solution_check)
from .data_ingestion import (Mollifier, build_boundary, build_data,
                             constant_net, dirac_net, parse_expression,
                             random_boundary, random_smooth_field,
                             viscosity_for_dirac)

__version__ = "0.1.0"
