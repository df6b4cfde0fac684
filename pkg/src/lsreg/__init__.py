"""Level-set Tikhonov reconstruction of piecewise non-constant coefficients in 2D elliptic problems."""

from .elliptic import SolverError, SolverSettings
from .grid import Grid2D
from .inversion import InversionConfig, RunReport, run_inversion
from .levelset import AdmissibleBox, LevelSetState
from .operators import ConductivityProblem, PotentialProblem

__all__ = [
    "AdmissibleBox",
    "ConductivityProblem",
    "Grid2D",
    "InversionConfig",
    "LevelSetState",
    "PotentialProblem",
    "RunReport",
    "SolverError",
    "SolverSettings",
    "run_inversion",
]
__version__ = "0.1.0"
