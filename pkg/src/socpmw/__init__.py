"""Multiplicative-weights solver for second-order cone programs.

The hot loops live in :mod:`socpmw.kernels` and are compiled with numba
when it is available; set ``SOCPMW_NUMBA=0`` to run the pure-numpy path.
"""
from ._accel import USE_NUMBA
from .instance import (
    FeasibilityInstance,
    InstanceFormatError,
    NormalizationReport,
    SocpInstance,
    feasibility_check,
    load_instance,
    normalize,
    objective_value,
    save_instance,
    validate,
    violation_vector,
)
from .jordan import ConePartition, MulticoneVector, jordan_exp, jordan_product, soc_norm, trace
from .mw import AllSatisfied, DualWeights, FeasibilityResult, Violated, feasibility_solve
from .oracles import DirectOracle, TwoStepOracle, direct_oracle, make_oracle, two_step_oracle
from .reduction import SolveReport, binary_search_solve, embed, extract_primal, lift_point, solve

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA",
    "AllSatisfied",
    "ConePartition",
    "DirectOracle",
    "DualWeights",
    "FeasibilityInstance",
    "FeasibilityResult",
    "InstanceFormatError",
    "MulticoneVector",
    "NormalizationReport",
    "SocpInstance",
    "SolveReport",
    "TwoStepOracle",
    "Violated",
    "binary_search_solve",
    "direct_oracle",
    "embed",
    "extract_primal",
    "feasibility_check",
    "feasibility_solve",
    "jordan_exp",
    "jordan_product",
    "lift_point",
    "load_instance",
    "make_oracle",
    "normalize",
    "objective_value",
    "save_instance",
    "soc_norm",
    "solve",
    "trace",
    "two_step_oracle",
    "validate",
    "violation_vector",
]
