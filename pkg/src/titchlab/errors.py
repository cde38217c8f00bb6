"""Shared exception types.

Domain errors (bad mathematical input) raise plain ValueError throughout the
package.  The classes here cover resource limits, which callers may want to
catch separately from bad input.
"""

import os

# Default sieve/table memory budget, overridable via TITCHLAB_MEM_MB.
_DEFAULT_MEM_MB = 4096


class CapacityError(Exception):
    """A table or sieve request exceeds the configured memory budget."""


class BudgetError(Exception):
    """A computation exceeds its configured work budget (e.g. X too large)."""


def memory_budget_bytes() -> int:
    """Current memory budget in bytes (env TITCHLAB_MEM_MB, default 4096)."""
    mb = os.environ.get("TITCHLAB_MEM_MB")
    try:
        return int(mb) * (1 << 20) if mb else _DEFAULT_MEM_MB * (1 << 20)
    except ValueError:
        return _DEFAULT_MEM_MB * (1 << 20)
