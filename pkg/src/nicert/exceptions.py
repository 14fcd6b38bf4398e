"""Exception types raised across the package."""


class NIError(Exception):
    """Base class for all package errors."""


class EvalAtPole(NIError, ZeroDivisionError):
    """A transfer matrix was evaluated at one of its poles."""


class LimitDiverges(NIError):
    """A scaled limit at the origin does not exist."""


class IllPosed(NIError):
    """The interconnection fails the well-posedness test at infinity."""


class ComplexSpectrum(NIError):
    """Real eigenvalues were requested but the spectrum is complex."""


class NotStable(NIError):
    """A stable system was required."""


class PreconditionViolated(NIError):
    """A theorem was applied outside its hypotheses.

    The offending classification (if any) is attached as ``witness``.
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class PsiInvalid(NIError):
    """The multiplier matrix does not satisfy its admissibility test."""


class ControllerUnstable(NIError):
    """The controller is not a member of RH-infinity."""


class NotSynthesizable(NIError):
    """No in-scope construction exists for this violation."""


class VerificationFailed(NIError):
    """A synthesized counterexample failed one of its checks."""

    def __init__(self, clause, message=""):
        super().__init__(f"{clause}: {message}" if message else clause)
        self.clause = clause


class SufficiencyCounterexampleFound(NIError):
    """An in-class plant destabilized a controller that passed the test."""

    def __init__(self, message, plant=None):
        super().__init__(message)
        self.plant = plant


class SamplerExhausted(NIError):
    """Rejection sampling ran out of attempts."""
