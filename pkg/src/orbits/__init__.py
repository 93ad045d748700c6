"""Collision-regularized periodic orbits of planar Stark-Zeeman systems.

A variational solver on the Levi-Civita blown-up loop space: loops ``z`` may
pass through the origin, the orbit is recovered as ``q(t) = z(tau_z(t))^2``
with a loop-dependent time change ``t_z``.
"""

from .action import (ActionBreakdown, action_original, action_parts, action_value, delay_residual,
                     epsilon_fields, grad_parts, grad_regularized, linear_coefficients)
from .errors import *  # noqa: F401,F403
from .fields import FieldModel, eval_field, make_preset, parameter_family
from .loops import (ANTIPERIODIC, PERIODIC, Loop, apply_involution, double_twisted, evaluate,
                    from_function, l2_inner, l2_norm, make_loop, random_loop, resample,
                    spectral_derivative, winding_number)
from .reparam import collision_report, find_collisions, invert_time, sigma_map, time_map
from .solver import Family, SolveOptions, SolveReport, continue_family, solve_critical
from .verify import (VerificationReport, beta_mu, energy_along, integrate_ode, mu_from_collisions,
                     ode_residual, shooting_gap, verify_solution, winding_mod2)

__version__ = "0.1.0"
