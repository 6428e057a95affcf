"""Exception hierarchy shared by all modules.

Every error carries a ``category`` used by the command line runner to pick an
exit code: ``validation`` (1), ``solver`` (2) or ``fit`` (3).
"""

from __future__ import annotations


class BilliardError(Exception):
    category = "solver"


class ValidationError(BilliardError):
    category = "validation"


class InvalidTable(ValidationError):
    pass


class InvalidCode(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class DegenerateChord(ValidationError):
    pass


class GluingHit(BilliardError):
    pass


class TangentialShot(BilliardError):
    pass


class InfeasibleChord(BilliardError):
    pass


class NoConvergence(BilliardError):
    pass


class InfeasibleOrbit(BilliardError):
    pass


class NonConcave(BilliardError):
    """Raised on request when a solved orbit is not a strict local maximum."""

    def __init__(self, message: str, result=None):
        super().__init__(message)
        self.result = result


class NotHyperbolic(BilliardError):
    pass


class OrbitBifurcation(BilliardError):
    pass


class NearUnitLambda(ValidationError):
    pass


class FitError(BilliardError):
    category = "fit"


class InsufficientDecayWindow(FitError):
    pass


class ParityMismatch(FitError):
    pass


class FitUnstable(FitError):
    pass


class NoRealRoot(FitError):
    pass


class BranchAmbiguity(FitError):
    """Signals that both curvature assignments fit the data equally well."""

    def __init__(self, message: str, roots=()):
        super().__init__(message)
        self.roots = tuple(roots)


EXIT_CODES = {"validation": 1, "solver": 2, "fit": 3}
