"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError -> 2, SolverFailure -> 3,
BudgetExceededError -> 4.
"""


class InputError(ValueError):
    """Malformed or inconsistent user input (shapes, ranges, file contents)."""


class SolverFailure(RuntimeError):
    """The LP solver could not certify a solution (cycling guard, infeasible
    system that should be feasible by construction, too many failed solves)."""


class BudgetExceededError(RuntimeError):
    """A combinatorial budget (vertex enumeration, sign-pattern search) was
    exceeded before a certified answer could be produced."""
