"""Symbolic engine: canonical expressions, text form, expansion coefficients,
the equation of motion and a numeric evaluator."""

from .expr import ONE, U, UB, Apply, Atom, Product, SymExpr, SymbolicError, canonicalize, order
from .numeric import numeric_eval
from .series import (
    Derivation,
    DerivationError,
    bracket3,
    check_golden,
    derive_mnv,
    fold_terms,
    load_golden,
    plain_coefficients,
    sharp_coefficients,
)
from .text import format_expr, parse

__all__ = [
    "ONE", "U", "UB", "Apply", "Atom", "Product", "SymExpr", "SymbolicError",
    "canonicalize", "order", "numeric_eval", "Derivation", "DerivationError",
    "bracket3", "check_golden", "derive_mnv", "fold_terms", "load_golden",
    "plain_coefficients", "sharp_coefficients", "format_expr", "parse",
]
