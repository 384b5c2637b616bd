"""Exact linear-inequality constraint kernel."""

from .dbm import DbmView, closure, closed_view, dbm_of, reduced_rows
from .linear import ConstraintSet, LinearIneq, parse_rational, sym_key
from .ops import (
    UnsatisfiableError,
    canonicalize,
    difference_bound,
    eliminate,
    eliminate_many,
    entails,
    entails_all,
    fourier_motzkin,
    is_satisfiable,
    maximize,
    ordered_rows,
)

__all__ = [
    "ConstraintSet",
    "DbmView",
    "LinearIneq",
    "UnsatisfiableError",
    "canonicalize",
    "closed_view",
    "closure",
    "dbm_of",
    "difference_bound",
    "eliminate",
    "eliminate_many",
    "entails",
    "entails_all",
    "fourier_motzkin",
    "is_satisfiable",
    "maximize",
    "ordered_rows",
    "parse_rational",
    "reduced_rows",
    "sym_key",
]
