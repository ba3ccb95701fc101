"""
Numerical toolkit for time-ordered operator calculus at matrix scale.

Submodules: ``matcore`` (dense linear algebra and semigroup primitives),
``gauge`` (gauge integration), ``chrono`` (time-ordered algebra),
``evolution`` (propagators, Dyson and Trotter expansions), ``pathsum``
(Poisson sum over measurement slots, Feynman-Kac), ``kernels`` (closed-form
kernels, symbol quadrature), ``bessel`` and ``cli``.
"""
from .errors import (AccuracyWarning, BudgetError, ChronoError, ConvergenceError, DomainError,
                     PartitionError, RangeError, SingularityError)
from .families import GeneratorFamily
from .matcore import expm, op_norm

__version__ = "0.1.0"

__all__ = [
    "AccuracyWarning",
    "BudgetError",
    "ChronoError",
    "ConvergenceError",
    "DomainError",
    "GeneratorFamily",
    "PartitionError",
    "RangeError",
    "SingularityError",
    "expm",
    "op_norm",
]
