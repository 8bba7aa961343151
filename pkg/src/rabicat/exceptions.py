"""Exception hierarchy shared by every rabicat module."""


class RabicatError(Exception):
    """Base class for all errors raised by rabicat."""


class TruncationTooSmall(RabicatError):
    """The Fock cutoff cannot represent the requested operator faithfully."""


class TruncationCeiling(RabicatError):
    """Automatic truncation growth hit ``n_ceiling`` before converging."""


class BasisMismatch(RabicatError):
    """Operands live in incompatible bases."""


class NotHermitian(RabicatError):
    pass


class PolicyMissing(RabicatError):
    """An A^2 quantity was requested but the coupling policy is ``none``."""


class DegenerateDelta(RabicatError):
    """Frequency counter term is undefined at sqrt(omega_c / (g C_g)) = 2."""


class NegativeRadicand(RabicatError):
    pass


class FamilyParamMismatch(RabicatError):
    """Approximant family is inconsistent with the model parameters."""


class SolveFailure(RabicatError):
    """Shifted resolvent solve failed; indicates a numerics bug."""


class ConfigError(RabicatError):
    """Base class for configuration problems (CLI exit status 2)."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ParseError(ConfigError):
    pass


class UnknownKey(ConfigError):
    pass


class RangeError(ConfigError):
    pass
