"""Exception types shared across the package."""


class PhibumpError(Exception):
    """Base class for all package errors."""


class QuadratureError(PhibumpError):
    """Adaptive quadrature failed to converge within the refinement budget."""


class RangeError(PhibumpError):
    """A numerical inversion left the representable range (argument too large)."""


class HypothesisViolation(PhibumpError):
    """Structural hypotheses on a generator or nonlinearity are violated.

    Carries the full list of violations so callers can report all of them,
    not just the first.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class ConfigError(PhibumpError):
    """A run configuration does not match the expected schema."""
