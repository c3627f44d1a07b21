"""Spectra of weighted Lipschitz operators on Lipschitz-free spaces of finite metric spaces."""

from .errors import (
    AdmissibilityError,
    LipSpecError,
    NumericalError,
    OracleMismatch,
    ParameterError,
    PreconditionError,
    ProblemFileError,
    StructuralError,
)
from .free import FreeVector, norm_bounds, norm_real
from .metric import PointedMetricSpace, SelfMap, Weight, make_space, validate_metric
from .operator import WeightedLipOperator, apply, build, operator_norm, power
from .spectral import decompose, oracle_compare, point_spectrum

__version__ = "0.1.0"
