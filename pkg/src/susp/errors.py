"""
Errors

Domain exceptions raised by the simulation, learning and harness layers.
Each one also derives from the closest built-in so callers that only know
about ValueError / ArithmeticError / RuntimeError keep working.
"""


class SuspError(Exception):
    """Base class for all susp errors"""


class Unreachable(SuspError, ValueError):
    """The five-bar loop cannot close for the requested control-link angles"""


class JointLimitError(SuspError, ValueError):
    """A control-link angle lies outside the mechanism's joint limit"""


class OutOfWorld(SuspError, ValueError):
    """A terrain query falls outside the simulated world"""


class NumericalBlowup(SuspError, ArithmeticError):
    """The integrator produced a non-finite coordinate or rate"""


class EpisodeFinished(SuspError, RuntimeError):
    """step() was called on an episode that has already ended"""


class DimensionMismatch(SuspError, ValueError):
    """An input vector does not match the layer size it is fed into"""


class NonFiniteGradient(SuspError, ArithmeticError):
    """An optimizer step received a gradient with NaN or infinite entries"""


class NonFiniteLoss(SuspError, ArithmeticError):
    """A training loss evaluated to NaN or infinity"""


class BadCheckpoint(SuspError, ValueError):
    """A checkpoint file is unreadable, from another format version, or mis-shaped"""


class ConfigError(SuspError, ValueError):
    """A configuration file or override is malformed or names an unknown key"""
