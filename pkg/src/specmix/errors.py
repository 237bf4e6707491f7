"""Exception types shared across the package.

Domain errors (bad arguments, malformed inputs, infeasible requests) raise
plain ValueError; these classes mark failures that need their own exit code
at the command line.
"""


class DataError(ValueError):
    """Input data could not be read or is not in a supported format."""


class NumericalError(RuntimeError):
    """A numerical routine failed beyond what regularization is allowed to fix."""
