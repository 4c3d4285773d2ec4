"""Positive solutions of nonlocal Caputo boundary value problems.

    D^alpha u + f(t, u) = 0,  0 < t < 1,  2 < alpha <= 3,
    u(0) = u''(0) = 0,  u(1) = mu u(eta) + beta int_0^1 u dA.
"""

__version__ = "0.1.0"

from .existence import (ExistenceCertificate, GrowthEnvelope, certify, check_c1,
                        check_c2)
from .expr import Expression, evaluate, free_vars, parse
from .kernel import (HypothesisError, KernelContext, ProblemSpec, SpecError, bound_phi,
                     bound_rho, check_hypotheses, g_weight, green_g, kernel_h,
                     lambda_const, psi, rho_max)
from .measures import SignedMeasure, breakpoints, rs_integral, total_variation
from .quadrature import QuadratureRule, integrate, refine_until
from .solver import (GridFunction, SolveReport, apply_operator, picard_solve,
                     solve_linear, verify_solution)
from .spectral import (SpectralBounds, gelfand_check, nystrom_matrix, power_iteration,
                       scale_radius, spectral_bounds, tau1, tau2)

__all__ = [
    "ExistenceCertificate", "GrowthEnvelope", "certify", "check_c1", "check_c2",
    "Expression", "evaluate", "free_vars", "parse",
    "HypothesisError", "KernelContext", "ProblemSpec", "SpecError", "bound_phi",
    "bound_rho", "check_hypotheses", "g_weight", "green_g", "kernel_h",
    "lambda_const", "psi", "rho_max",
    "SignedMeasure", "breakpoints", "rs_integral", "total_variation",
    "QuadratureRule", "integrate", "refine_until",
    "GridFunction", "SolveReport", "apply_operator", "picard_solve",
    "solve_linear", "verify_solution",
    "SpectralBounds", "gelfand_check", "nystrom_matrix", "power_iteration",
    "scale_radius", "spectral_bounds", "tau1", "tau2",
]
