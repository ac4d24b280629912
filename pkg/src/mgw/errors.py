"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: validation problems (bad input,
malformed forests, unusable specs) exit 1, statistical acceptance
failures exit 2, and exhausted budgets exit 3.
"""


class MGWError(Exception):
    """Base class for all package errors."""


class StructureError(MGWError):
    """A forest/tree violates a structural invariant (closure, mode, lookup)."""


class SpecError(MGWError):
    """An offspring specification is invalid or unusable for the request."""


class NumericalError(MGWError):
    """An iterative numerical routine failed to converge."""


class ConsistencyError(SpecError):
    """Cross-checked quantities disagree beyond the allowed spread."""


class SupportError(SpecError):
    """A conditioning event has probability zero (wrong residue class)."""


class BudgetError(MGWError):
    """A node/iteration budget was exhausted before the task finished."""
