"""Kirchhoff divergence and Laplace operators defined by pairs of distributions.

Submodules
----------
core          field types, node/pair measures, the division checker
graph_ops     weighted node systems
lattice_ops   finite differences and the discrete fractional Laplacian on hZ^n
dyadic_ops    dyadic metric, Haar system, dyadic fractional operators
metric_ops    metric-measure nets and Ahlfors-regular kernels
continuum_ops classical, fractional and Hilbert-kernel operators on R^n
couplings     independent, deterministic and positive-order couplings
convergence   quotient families and limit estimation
catalog       named builtin fields, maps and densities
acceptance    the acceptance suite behind ``kirlab reproduce-all``
cli           the ``kirlab`` command line
"""

from .core import (
    ContractError,
    ConvergenceError,
    CouplingWeights,
    DivisionReport,
    EvaluationError,
    KirlabError,
    NodeMeasure,
    ScalarField,
    TwoPointField,
    check_division,
    grad0,
    num_y_derivs,
)

__version__ = "0.1.0"

__all__ = [
    "ContractError",
    "ConvergenceError",
    "CouplingWeights",
    "DivisionReport",
    "EvaluationError",
    "KirlabError",
    "NodeMeasure",
    "ScalarField",
    "TwoPointField",
    "check_division",
    "grad0",
    "num_y_derivs",
]
