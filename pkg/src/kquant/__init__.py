"""Quantization of S^1-invariant Kähler metrics on CP^1 polarized by O(1).

Submodules
----------
numerics
    Quadrature, Hermitian linear algebra, finite differences.
symspace
    Geometry of positive-definite Hermitian forms.
toric
    Invariant potentials, their geodesics and the functionals I, E, Ca.
quantize
    ``Hilb_k``, ``FS_k``, the Bergman density and the quantized functionals.
experiments
    Convergence studies and the ``kq`` command-line interface.
"""
from . import numerics, quantize, symspace, toric
from .errors import ContractViolation, DegenerateTriangle, DomainError, ToleranceFailure

__version__ = "0.1.0"

__all__ = [
    "numerics",
    "symspace",
    "toric",
    "quantize",
    "ContractViolation",
    "DegenerateTriangle",
    "DomainError",
    "ToleranceFailure",
]
