"""Exception types shared across the toolkit."""


class GroundSegError(Exception):
    """Base class for all toolkit errors."""


class MalformedFileError(GroundSegError):
    """A binary file violates its format (bad stride, magic, or truncation)."""


class RingOverflowError(GroundSegError):
    """Ring derivation found more azimuth wraps than the sensor has beams."""


class MissingRingError(GroundSegError):
    """An operation that requires ring indices met an unassigned ring."""


class DegeneratePointError(GroundSegError):
    """Azimuth is undefined for a point at the sensor's vertical axis."""


class EmptyFrameError(GroundSegError):
    """A dense frame holds no occupied cell, so interpolation has no sources."""


class EmptyInputError(GroundSegError):
    """An operation that needs at least one element received none."""


class ShapeError(GroundSegError):
    """Array shapes or lengths disagree with the operation's contract."""


class StateError(GroundSegError):
    """An object is in the wrong state for the requested operation."""


class InvalidSeedError(GroundSegError):
    """A flood seed sits on an unoccupied grid cell."""


class EmptyMaskError(GroundSegError):
    """A loss mask selects zero cells."""


class DegenerateTruthError(GroundSegError):
    """PR evaluation needs at least one positive ground-truth point."""


class DivergenceError(GroundSegError):
    """Training produced a non-finite loss.

    Carries the iteration at which the divergence was detected.
    """

    def __init__(self, iteration: int):
        super().__init__(f"non-finite loss at iteration {iteration}")
        self.iteration = iteration


class CorruptModelError(GroundSegError):
    """A model file's layer table disagrees with its named topology."""


class ConfigError(GroundSegError):
    """A configuration value is out of its allowed domain."""
