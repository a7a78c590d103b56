"""Numerical toolkit for state-dependent maximal monotone differential inclusions.

``x'(t) in f(t, x) - A_{t,x}(x)`` is discretized by the implicit
catching-up scheme; nonsmooth Lyapunov pairs are checked along the discrete
trajectories; sweeping processes and Lur'e systems are reduced to the
generic form. Hot loops run under numba unless ``MMDI_DISABLE_NUMBA=1``.
"""

from .errors import (ConfigError, DomainError, EmptyVelocitySetError, InadmissibleError,
                     InfeasibleSetError, MMDIError, ResolventError, SolverError, StepSizeError)
from .sets import Ball, ConvexSet, IntervalProduct, Polytope, project
from .operators import (GraphPoint, LinearPSD, LureComposed, MonotoneOperator, NormalCone,
                        Shifted, SignRelay, DirectSum, graph_membership_residual, minimal_norm,
                        resolvent, shift_operator, solve_generalized_equation, yosida, zero_operator)
from .metrics import (continuous_gronwall_bound, dis_estimate, discrete_gronwall_bound, hausdorff,
                      resolvent_gap_bound)
from .solver import (InclusionProblem, Trajectory, admissible, apriori_bounds, convergence_study,
                     hypo_probe, lipschitz_fit, solve, step)
from .lyapunov import (LyapunovPair, builtin_scenarios, evaluate_pair_decay, example_1, example_2,
                       proximal_criterion, truncated_velocity_set)
from .applications import (LureSystem, SweepingScenario, check_assumptions, lure_problem,
                           phi0_enumerate, phi0_solve, sweeping_problem)

__version__ = "0.1.0"
