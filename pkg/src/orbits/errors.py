"""Exception hierarchy shared by all modules."""


class OrbitsError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(OrbitsError, ValueError):
    pass


class ShapeError(OrbitsError, ValueError):
    pass


class ParityError(OrbitsError, ValueError):
    pass


class WindingUndefinedError(OrbitsError, ArithmeticError):
    """A loop passes (numerically) through the origin."""


class UnknownPresetError(OrbitsError, KeyError):
    pass


class InvalidParameterError(OrbitsError, ValueError):
    pass


class DomainError(OrbitsError, ValueError):
    """Position inside an exclusion disc around a non-regularized primary."""


class DegenerateLoopError(OrbitsError, ValueError):
    """Loop with vanishing L2 norm, outside the blown-up loop space."""


class SingularLoopError(OrbitsError, ValueError):
    """Unregularized loop that touches the origin where it must not."""


class DegenerateCollisionError(OrbitsError, ValueError):
    pass


class DegenerateFlowError(OrbitsError, RuntimeError):
    pass


class NearCollisionError(OrbitsError, RuntimeError):
    """Direct integration came within ``r_min`` of the origin."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class SeedInvalidError(OrbitsError, RuntimeError):
    pass


class ConfigError(OrbitsError, ValueError):
    pass
