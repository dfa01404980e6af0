"""Exception types shared across the toolkit.

Each error carries a machine-readable ``kind`` used by the CLI to build
``{"error": kind, "stage": name}`` payloads and to pick exit codes:
invalid input 2, numerical failure 3, verification failure 4.
"""


class GqspError(Exception):
    kind = "error"
    exit_code = 1


class InvalidInputError(GqspError):
    kind = "invalid"
    exit_code = 2


class AdmissibilityError(GqspError):
    kind = "inadmissible"
    exit_code = 2


class NonConvergenceError(GqspError):
    kind = "nonconvergence"
    exit_code = 3


class InvalidPairError(GqspError):
    kind = "cancellation"
    exit_code = 3


class DegeneracyError(GqspError):
    kind = "degenerate"
    exit_code = 3


class VerificationError(GqspError):
    kind = "verification"
    exit_code = 4
