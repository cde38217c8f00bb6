"""titchlab: a desk-scale numerical laboratory for shifted divisor sums.

Exact arithmetic sums (von Mangoldt-weighted divisor, character-convolution,
two-square and Hecke-eigenvalue shifts) on one side; explicit main terms
(Euler products, L(1, chi), logarithmic integrals) on the other; plus the
elementary machinery those comparisons rest on: Kloosterman and Ramanujan
sums with their bounds, Dirichlet characters with conductors, a delta-symbol
decomposition of the Kronecker delta, and exact Ramanujan tau tables.
"""

from .errors import BudgetError, CapacityError

__all__ = ["BudgetError", "CapacityError"]

__version__ = "0.1.0"
