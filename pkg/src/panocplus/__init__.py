"""Adaptive-stepsize PANOC-type solvers for nonconvex composite problems."""

from .bench import BENCH_IDS, build_bench_problem
from .directions import (DirectionProvider, LBFGSDirection, NewtonFBEDirection, NominalDirection,
                         PaperDivergenceDirection, ZeroDirection)
from .exceptions import (ConfigError, DomainError, InnerBudgetExhausted, OracleFailure,
                         PanocError, ProxBoundViolation, UnknownProblem)
from .fbe import PgStep, aug_lagrangian, fbe_moreau_form, pg_step
from .problem import (CompositeProblem, DeltaStationary, Exact, ProxOracle, ProxResult,
                      SmoothOracle, SolverConfig, UniformLocal, check_gradient, phi)
from .prox import BoxIndicator, InexactProxWrapper, L1Norm, ZeroFunction, ZeroNorm
from .solvers import (SolveReport, Status, solve_adaptive_pg, solve_panoc_classic,
                      solve_panoc_plus, verify_descent)

__version__ = "0.1.0"
