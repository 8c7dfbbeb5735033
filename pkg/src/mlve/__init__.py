"""Multiscale loop vertex expansion of a quartic vector model.

The package evaluates log Z of the model order by order through the
two-level jungle formula (Bosonic forests of intermediate-field replicas,
Fermionic forests coupling their blocks), checks the result against an
exact one-dimensional quadrature of the partition function, and verifies
numerically every combinatorial identity and convergence bound entering
the construction.
"""

from .errors import BudgetExceededError, DomainError, QuadratureUnreliableError
from .model_core import ModelParams, SliceIndexSet, slice_range

__version__ = "0.1.0"

__all__ = [
    "BudgetExceededError",
    "DomainError",
    "ModelParams",
    "QuadratureUnreliableError",
    "SliceIndexSet",
    "slice_range",
    "__version__",
]
