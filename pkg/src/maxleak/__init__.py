"""Min-entropy and maximal-leakage tools for evaluating masked implementations."""
from .errors import CapabilityError, DomainError, ValidationError
from .group import FiniteAbelianGroup
from .kernels import BACKEND
from .pmf import Pmf, min_entropy, renyi_entropy, shannon_entropy

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "CapabilityError", "DomainError", "ValidationError",
    "FiniteAbelianGroup", "Pmf", "min_entropy", "renyi_entropy", "shannon_entropy",
]
