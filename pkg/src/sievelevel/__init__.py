"""Numerics for sieve bounds built on a level of distribution beyond 1/2.

Modules:

* special_functions: Buchstab's function, the linear sieve functions F, f
  and Wu's saving factor.
* exponents: the exponent maps giving the level as a function of prime
  sizes, and their closed-form constants.
* factorization: factorizations d = abc of well-factorable moduli.
* sieve_integrals: the I_n and G_n integrals and Wu's saving H_2.
* bound_assembly: singular series and the assembled upper-bound constant.
* exceptional_model: the exponent calculus for exceptional eigenvalues.
* cli: the ``sievelevel`` command line.
"""

from .bound_assembly import (
    BoundReport,
    assemble_bound,
    hardy_littlewood_main,
    optimize_params,
    singular_series,
)
from .exponents import ExponentConfig
from .quadrature import QuadratureError, QuadratureSpec
from .sieve_integrals import GOLDBACH_PARAMS, TWIN_PARAMS, SieveParams

__all__ = [
    "BoundReport",
    "ExponentConfig",
    "GOLDBACH_PARAMS",
    "QuadratureError",
    "QuadratureSpec",
    "SieveParams",
    "TWIN_PARAMS",
    "assemble_bound",
    "hardy_littlewood_main",
    "optimize_params",
    "singular_series",
]

__version__ = "0.1.0"
