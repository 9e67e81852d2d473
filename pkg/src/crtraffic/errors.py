"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of a function."""


class DegenerateTrafficError(ArithmeticError):
    """Hypothesis weights vanish, so a conditional average is undefined."""


class ThresholdSolveError(RuntimeError):
    """The detection threshold could not be bracketed or refined."""


class InvariantViolation(RuntimeError):
    """A computed quantity broke a model invariant (an upstream bug)."""


class ConfigError(ValueError):
    """Invalid experiment configuration."""
