"""Optimal control on stratified domains of R^d with discontinuous dynamics."""

from .config import dump_config, load_config, parse_config
from .control import ControlProblem, ControlSet, Piece, PolynomialCost, check_controllability, essential_controls
from .errors import (  # noqa: F401
    StrataError, DuplicateHyperplane, NonPositiveDimension, PointNotInClosure, StratumPieceMissing,
    GrowthViolation, NotOnInterface, EmptyEssentialSet, EmptyTangentialSet, ZenoCapExceeded,
    BudgetExceeded, OutOfRange, GridOutOfRange, BoxTooSmall, ConfigParse, HyperplaneOutsideBox,
)
from .grid import StratifiedGrid, build_grid, cfl_time_steps
from .hamiltonians import H_E, H_F, H_Gamma
from .problems import BUILTINS, builtin, closed_form
from .solver import ValueGrid, solve, solve_continuous, solve_lsc
from .stratification import Hyperplane, Stratification, build_stratification
from .trajectories import PiecewiseControl, integrate, integrate_backward, oracle_search, oracle_value

__version__ = "0.1.0"
