"""Exception types shared across the package."""


class TwistAbcError(Exception):
    """Base class for every error raised by this package."""


class TooLarge(TwistAbcError):
    pass


class LengthMismatch(TwistAbcError):
    pass


class NoParse(TwistAbcError):
    pass


class Ambiguous(TwistAbcError):
    pass


class NotASubdeletion(TwistAbcError):
    pass


class EmptyInputs(TwistAbcError):
    pass


class NotCoprime(TwistAbcError):
    pass


class IndexOutOfRange(TwistAbcError):
    pass


class WrongBlockCount(TwistAbcError):
    pass


class WrongBlockLength(TwistAbcError):
    pass


class BadBlockCount(TwistAbcError):
    pass


class NotTwistShaped(TwistAbcError):
    pass


class LevelBeyondPrefix(TwistAbcError):
    pass


class NotClosed(TwistAbcError):
    """A tree prefix is missing an initial segment of one of its nodes."""


class NotDivisible(TwistAbcError):
    pass


class R2Violated(TwistAbcError):
    pass


class PrereqViolated(TwistAbcError):
    pass


class InvariantViolated(TwistAbcError):
    """A substitution input breaks a named constraint (see ``name``)."""

    def __init__(self, name, detail=""):
        self.name = name
        super().__init__(f"{name}: {detail}" if detail else name)


class NotIntegral(TwistAbcError):
    pass


class ActionUndefined(TwistAbcError):
    pass


class BConditionFailed(TwistAbcError):
    pass


class SpecViolation(TwistAbcError):
    """A construction level fails one of the clauses (E1)..(A8)."""

    def __init__(self, clause, detail=""):
        self.clause = clause
        super().__init__(f"{clause}: {detail}" if detail else clause)


class LedgerViolation(TwistAbcError):
    pass


class PropagationMismatch(TwistAbcError):
    pass


class LevelTooLow(TwistAbcError):
    pass


class EvenParity(TwistAbcError):
    pass


class NonPositiveBound(TwistAbcError):
    pass


class ConfigError(TwistAbcError):
    pass
