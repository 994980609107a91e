"""Exception types shared across the package."""


class FeasibilityError(ValueError):
    """A matrix violates an orthonormality/feasibility tolerance."""


class RankDeficientError(ValueError):
    """An input is (numerically) rank deficient where full rank is required."""


class DivergenceError(RuntimeError):
    """An iterative run produced a non-finite or runaway loss."""
