"""Exception hierarchy shared by the whole package.

Exit-code mapping for the CLI: domain errors exit 2, numeric non-convergence
exits 3, coefficient-coverage exhaustion exits 4 (usage errors exit 1).
"""


class RsmomError(Exception):
    """Base class; carries the CLI exit code."""

    exit_code = 2


class DomainError(RsmomError):
    """Input outside the mathematical domain of an operation."""

    exit_code = 2


class StateError(RsmomError):
    """Operation requires state (Pell data, divisor averages) not present."""

    exit_code = 2


class NumericError(RsmomError):
    """Quadrature or series evaluation failed to converge.

    `diagnostics` holds whatever the failing routine knew (panel counts,
    last increments, ...) so reports can surface it.
    """

    exit_code = 3

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class CoverageError(RsmomError):
    """A Hecke eigenvalue outside the tabulated prime range was requested."""

    exit_code = 4

    def __init__(self, message, prime=None):
        super().__init__(message)
        self.prime = prime
