"""Hecke operators on definite quaternion algebras ramified at one prime, mod p."""

from .cache import ClassSetCache, verify_cache
from .classes import ClassSet, left_ideal_classes, verify_class_set
from .fields import Fp2, Fp2Elem, PrimeField
from .hecke import (
    GeneralHecke,
    HeckeMatrix,
    build_context,
    check_congruences,
    compute_MK,
    hecke_matrix_general,
    hecke_matrix_level1,
    weight_k_matrix,
)
from .linalg import char_poly, eigenvalues_fp2, simultaneous_eigensystems
from .quaternion import AlgebraParams, OrderBasis, Quaternion, build_algebra, maximal_order_basis
from .splitting import SplittingData, compute_splitting, lift_step_2adic, lift_step_odd, precision_plan

__version__ = "0.1.0"

__all__ = [
    "AlgebraParams",
    "ClassSet",
    "ClassSetCache",
    "Fp2",
    "Fp2Elem",
    "GeneralHecke",
    "HeckeMatrix",
    "OrderBasis",
    "PrimeField",
    "Quaternion",
    "SplittingData",
    "build_algebra",
    "build_context",
    "char_poly",
    "check_congruences",
    "compute_MK",
    "compute_splitting",
    "eigenvalues_fp2",
    "hecke_matrix_general",
    "hecke_matrix_level1",
    "left_ideal_classes",
    "lift_step_2adic",
    "lift_step_odd",
    "maximal_order_basis",
    "precision_plan",
    "simultaneous_eigensystems",
    "verify_cache",
    "verify_class_set",
    "weight_k_matrix",
]
