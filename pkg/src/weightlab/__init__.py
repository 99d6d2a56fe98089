"""Weight sequences, weight functions, their conjugates and associated weight matrices."""

from .errors import (DomainError, HorizonError, InternalError, InvalidArgument, PreconditionViolation,
                     WeightlabError, WellDefinednessError)
from .verdict import GrowthIndexEstimate, State, Verdict
from .seqcore import WeightSequence, gevrey, from_values
from .weightfn import (WeightFunction, assoc_weight, gamma_bar_index, gamma_index, gevrey_weight, id_power,
                       invert, log_power, normalized_id_power, power_substitute)
from .conjugate import ConjugateResult, lower_conj, upper_conj, well_defined_guard
from .matrixcalc import WeightMatrix, assoc_matrix
from .theoremlab import SUITES, SuiteReport, obstruction_demo
from .expr import parse_expr, to_weight

__version__ = "0.1.0"

__all__ = [
    "DomainError", "HorizonError", "InternalError", "InvalidArgument", "PreconditionViolation",
    "WeightlabError", "WellDefinednessError", "GrowthIndexEstimate", "State", "Verdict",
    "WeightSequence", "gevrey", "from_values", "WeightFunction", "assoc_weight", "gamma_bar_index",
    "gamma_index", "gevrey_weight", "id_power", "invert", "log_power", "normalized_id_power",
    "power_substitute", "ConjugateResult", "lower_conj", "upper_conj", "well_defined_guard",
    "WeightMatrix", "assoc_matrix", "SUITES", "SuiteReport", "obstruction_demo", "parse_expr", "to_weight",
]
