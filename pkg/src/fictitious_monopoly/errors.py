"""Exception hierarchy.

Every error raised deliberately by the package derives from
:class:`EquivalenceError`, so callers (and the CLI) can separate modelling
failures from programming errors.  Errors carry optional ``u`` (offending
rate or point) and ``stage`` (pipeline step) attributes.
"""


class EquivalenceError(Exception):
    def __init__(self, message, *, u=None, stage=None):
        super().__init__(message)
        self.u = u
        self.stage = stage

    def with_stage(self, stage):
        if self.stage is None:
            self.stage = stage
        return self

    def to_dict(self):
        out = {"type": type(self).__name__, "message": str(self)}
        if self.stage is not None:
            out["stage"] = self.stage
        if self.u is not None:
            out["u"] = self.u if isinstance(self.u, (int, float, str)) else repr(self.u)
        return out


class DomainError(EquivalenceError, ValueError):
    """Evaluation requested outside a declared domain."""


class ParameterError(EquivalenceError, ValueError):
    """Model parameters violate a standing assumption."""


class SingularityError(EquivalenceError, ArithmeticError):
    """A denominator or derivative vanished, or a pole was hit."""


class SignError(EquivalenceError, ValueError):
    """The own risk index e1 is not positive."""


class QuadratureError(EquivalenceError, ArithmeticError):
    pass


class SingularPayoffError(EquivalenceError, ArithmeticError):
    """Closed-form fictitious payoff exponent degenerates (log case)."""


class ExponentError(SingularPayoffError):
    pass


class NoRootError(EquivalenceError, ArithmeticError):
    pass


class NonUniqueError(EquivalenceError, ArithmeticError):
    pass


class BlowUpError(EquivalenceError, ArithmeticError):
    pass


class StallError(EquivalenceError, ArithmeticError):
    pass


class ShockError(EquivalenceError, ArithmeticError):
    """Characteristics cross: no classical (C^1) MPNE on the window."""


class DegenerateError(EquivalenceError, ArithmeticError):
    pass


class InfeasibleError(EquivalenceError, ValueError):
    pass


class ComplexEigenError(EquivalenceError, ArithmeticError):
    pass


class BranchSingularError(EquivalenceError, ArithmeticError):
    pass


class InversionError(EquivalenceError, ArithmeticError):
    pass


class ConcavityError(EquivalenceError, ValueError):
    pass


class HypothesisError(EquivalenceError, ValueError):
    pass


class ValidationError(EquivalenceError, AssertionError):
    """A constructed object failed its own invariant checks."""


class SchemaError(EquivalenceError, ValueError):
    def __init__(self, message, errors=None, **kw):
        super().__init__(message, **kw)
        self.errors = list(errors or [])

    def to_dict(self):
        out = super().to_dict()
        out["errors"] = self.errors
        return out
