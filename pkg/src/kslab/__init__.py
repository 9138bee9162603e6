"""Kochen-Specker colorability and partial spectra of small matrix partial rings."""

from .scalars import PrimeField, ExtensionField, Rationals, ZZ, QQ, build_extension, parse_ring, parse_scalar
from .matrices import ColumnVector, SquareMatrix
from .enumeration import enumerate_idempotents, enumerate_projections, gaussian_binomial, load_bundled
from .solver import ConstraintSystem, Certificate, extract_constraints, solve, check_certificate
from .boolean import PartialBooleanAlgebra, Coloring, bijection_triple

__version__ = "0.1.0"

__all__ = [
    "PrimeField", "ExtensionField", "Rationals", "ZZ", "QQ", "build_extension", "parse_ring",
    "parse_scalar", "ColumnVector", "SquareMatrix", "enumerate_idempotents",
    "enumerate_projections", "gaussian_binomial", "load_bundled", "ConstraintSystem",
    "Certificate", "extract_constraints", "solve", "check_certificate",
    "PartialBooleanAlgebra", "Coloring", "bijection_triple", "__version__",
]
