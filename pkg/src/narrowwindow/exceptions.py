class NarrowWindowError(Exception):
    """Base class for all package errors."""


class GeometryError(NarrowWindowError, ValueError):
    """Invalid geometry or input range."""


class IncompatibleIntervalError(NarrowWindowError, ValueError):
    pass


class EnergyOutOfBracketError(NarrowWindowError, ValueError):
    pass


class TruncationError(NarrowWindowError, ValueError):
    pass


class ValidityError(NarrowWindowError, ValueError):
    """A closed form or lemma is used outside its range of validity."""


class ConvergenceError(NarrowWindowError, RuntimeError):
    """A numerical procedure did not reach its tolerance."""


class FactorizationError(NarrowWindowError, RuntimeError):
    def __init__(self, message, energy=None):
        super().__init__(message)
        self.energy = energy


class IndefiniteFormError(NarrowWindowError, ValueError):
    pass


class ConstraintDegeneracyError(NarrowWindowError, ValueError):
    pass


class BracketEmptyError(NarrowWindowError, RuntimeError):
    pass


class GridMismatchError(NarrowWindowError, ValueError):
    pass
