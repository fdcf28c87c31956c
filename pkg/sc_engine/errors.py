"""
Small-Cancellation Workbench - Error Taxonomy

Every failure the workbench raises derives from WorkbenchError and carries
a human-readable detail plus the process exit code the CLI maps it to:
- 1: a check ran and failed (verdicts, not exceptions)
- 2: a budget was exhausted or a result is Unknown
- 3: usage or input error
"""

from typing import Optional

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BUDGET = 2
EXIT_USAGE = 3


class WorkbenchError(Exception):
    """Base class for all workbench errors"""

    exit_code: int = EXIT_USAGE

    def __init__(self, detail: str, exit_code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        if exit_code is not None:
            self.exit_code = exit_code

    def __str__(self) -> str:
        return f"{type(self).__name__}: {self.detail}"


# =============================================================================
# GROUP SPECIFICATION AND WORD INPUT
# =============================================================================

class SpecSyntaxError(WorkbenchError):
    pass


class InvalidTable(WorkbenchError):
    pass


class DuplicateFactorIndex(WorkbenchError):
    pass


class UnknownGenerator(WorkbenchError):
    pass


class ZeroPower(WorkbenchError):
    pass


class QuotientNotDecidable(WorkbenchError):
    pass


class SpecMismatch(WorkbenchError):
    pass


class InfiniteFactorInBall(WorkbenchError):
    pass


class RadiusCapExceeded(WorkbenchError):
    pass


# =============================================================================
# PATHS, SETS AND BUILDERS
# =============================================================================

class FactorMismatch(WorkbenchError):
    pass


class NotACycle(WorkbenchError):
    pass


class EmptySeed(WorkbenchError):
    pass


class TrivialLetter(WorkbenchError):
    pass


class DuplicatePower(WorkbenchError):
    pass


class InvolutionLetter(WorkbenchError):
    pass


class ForbiddenElement(WorkbenchError):
    pass


class TooShort(WorkbenchError):
    pass


class UnknownConstants(WorkbenchError):
    pass


class InvalidParameter(WorkbenchError):
    pass


# =============================================================================
# QUOTIENTS, PROBES, REPORTS
# =============================================================================

class NotCertified(WorkbenchError):
    pass


class BoundTooLarge(WorkbenchError):
    pass


class NotHyperbolic(WorkbenchError):
    pass


class BudgetExceeded(WorkbenchError):
    exit_code = EXIT_BUDGET


class CorruptReport(WorkbenchError):
    pass


class UsageError(WorkbenchError):
    pass
