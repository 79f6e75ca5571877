"""Stochastic extragradient solvers for finite-sum variational inequalities."""

from .errors import (
    ConfigError,
    ContractViolation,
    DivergenceError,
    InfeasibleError,
    NumericalError,
    ParameterError,
    RegimeMismatchError,
    SegrrError,
    ValidationError,
)
from .problems import FiniteSumProblem, ProblemConstants, generate_problem
from .sampling import SamplingStrategy
from .schedules import Schedule, StepSizePair, horizon_stepsize, max_stepsize
from .solvers import omd_epoch, run_solver, seg_epoch, sgda_epoch

__version__ = "0.1.0"
