"""Error taxonomy shared by the library and the CLI.

The CLI maps these onto exit codes: certification failures exit 1,
structural errors exit 2, resource errors exit 3.
"""


class GroupBiasError(Exception):
    """Base class for all library errors."""


class StructuralError(GroupBiasError):
    """A precondition on the inputs is violated (wrong group, bad modulus, ...)."""


class ResourceError(GroupBiasError):
    """The request exceeds a configured cap (enumeration, memory, search range)."""


class CertificationError(GroupBiasError):
    """A certified quantity contradicts its claim, or certification failed to converge."""


class SearchBudgetError(CertificationError):
    """A randomized search exhausted its budget.

    Carries the best candidate found so callers can inspect or reuse it.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
