"""Exception types raised by lambda_cpt."""


class LambdaCPTError(Exception):
    """Base class for all package errors."""


class ValidationError(LambdaCPTError, ValueError):
    """An input violates a documented invariant.

    ``invariant`` names the violated rule (e.g. ``"unit trace"``).
    """

    def __init__(self, invariant, detail=""):
        self.invariant = invariant
        msg = invariant if not detail else f"{invariant}: {detail}"
        super().__init__(msg)


class BasisMismatchError(LambdaCPTError, ValueError):
    """A density matrix was given in the wrong basis."""


class RegimeError(LambdaCPTError, ValueError):
    """Parameters fall outside the regime where a closed form holds."""


class UniquenessError(RegimeError):
    """The steady state is not unique; use the degenerate / initial-condition path."""


class NumericalError(LambdaCPTError, RuntimeError):
    """Integration failed (step-size underflow or non-finite state)."""


class StepUnderflowError(NumericalError):
    pass
