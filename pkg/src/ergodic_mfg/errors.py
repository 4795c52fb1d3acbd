"""Exception hierarchy shared by all modules."""


class MFGError(Exception):
    """Base class for every error raised by the package."""


class InvalidInputError(MFGError, ValueError):
    """Non-finite or out-of-range input to a pure evaluation routine."""


class DomainError(MFGError, ValueError):
    """Exponent or parameter outside the admissible window of a formula."""


class OutOfScopeError(DomainError):
    """Exponent at or beyond the Sobolev-critical bound."""


class SingularScalingError(DomainError):
    """Mass rescaling requested exactly at the mass-critical exponent."""


class DegeneratePairError(MFGError, ValueError):
    """A quotient is undefined because a defining integral vanishes."""


class FormulaError(MFGError, RuntimeError):
    """A closed-form self-consistency check failed."""


class SolverError(MFGError, RuntimeError):
    """Base class for numerical failures inside the solver."""

    def __init__(self, message, residual=None, stage=None):
        super().__init__(message)
        self.residual = residual
        self.stage = stage


class ConvergenceError(SolverError):
    """Iteration budget exhausted before the tolerance was met."""


class OscillationError(ConvergenceError):
    """A period-2 cycle persisted after repeated damping reductions."""


class StepSizeError(SolverError):
    """The iterate blew up; the pseudo-time step is too aggressive."""


class SchemeViolationError(SolverError):
    """A discrete scheme produced values violating its structural guarantee."""


class DomainTooSmallError(SolverError):
    """Too much mass sits near the truncation boundary."""
